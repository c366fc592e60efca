#include "run/config.hpp"

#include <fstream>

#include "common/error.hpp"

namespace pixeltext {

namespace {

enum class KeyType { boolean, integer, floating, text, int_list, double_list, text_list };

struct KeySpec {
    const char* name;
    KeyType type;
    nlohmann::json default_value;
};

// Every tunable in one place. "synthetic-text:N", "synthetic-treebank:N" and
// "synthetic-classify:N" are accepted wherever a corpus path is expected.
const std::vector<KeySpec>& schema() {
    static const std::vector<KeySpec> keys = {
        {"run.name", KeyType::text, "run"},
        {"run.out_dir", KeyType::text, "out"},
        {"run.seed", KeyType::integer, 42},
        {"run.checked", KeyType::boolean, true},
        {"data.seed", KeyType::integer, 7},
        {"front_end", KeyType::text, "pixel"},

        {"model.preset", KeyType::text, "desk"},
        {"model.hidden_dim", KeyType::integer, 64},
        {"model.num_layers", KeyType::integer, 2},
        {"model.num_heads", KeyType::integer, 4},
        {"model.mlp_ratio", KeyType::integer, 4},
        {"model.max_positions", KeyType::integer, 256},
        {"model.dropout", KeyType::floating, 0.0},
        {"model.use_positions", KeyType::boolean, true},
        {"model.pool_separator", KeyType::boolean, true},

        {"render.max_patches", KeyType::integer, 256},
        {"render.atlas", KeyType::text, ""},
        {"render.confusion", KeyType::text, ""},
        {"render.text", KeyType::text, ""},
        {"render.input", KeyType::text, ""},

        {"adam.beta1", KeyType::floating, 0.9},
        {"adam.beta2", KeyType::floating, 0.999},
        {"adam.epsilon", KeyType::floating, 1e-8},

        {"pretrain.corpus", KeyType::text, ""},
        {"pretrain.steps", KeyType::integer, 200},
        {"pretrain.batch_size", KeyType::integer, 8},
        {"pretrain.lr", KeyType::floating, 3e-3},
        {"pretrain.warmup_steps", KeyType::integer, 10},
        {"pretrain.weight_decay", KeyType::floating, 0.01},
        {"pretrain.mask_ratio", KeyType::floating, 0.25},
        {"pretrain.max_span_length", KeyType::integer, 6},
        {"pretrain.mlm_mask_ratio", KeyType::floating, 0.15},
        {"pretrain.checkpoint_interval", KeyType::integer, 100},

        {"bpe.vocab_size", KeyType::integer, 512},
        {"bpe.vocab", KeyType::text, ""},

        {"finetune.task", KeyType::text, "pos"},
        {"finetune.train", KeyType::text, ""},
        {"finetune.dev", KeyType::text, ""},
        {"finetune.steps", KeyType::integer, 300},
        {"finetune.batch_size", KeyType::integer, 8},
        {"finetune.lr", KeyType::floating, 1e-3},
        {"finetune.warmup_steps", KeyType::integer, 10},
        {"finetune.weight_decay", KeyType::floating, 0.01},
        {"finetune.eval_interval", KeyType::integer, 50},
        {"finetune.patience", KeyType::integer, 5},
        {"finetune.seeds", KeyType::int_list, nlohmann::json::array({42})},
        {"finetune.init_checkpoint", KeyType::text, ""},
        {"finetune.arc_dim", KeyType::integer, 64},
        {"finetune.label_dim", KeyType::integer, 32},
        {"finetune.word_pool", KeyType::text, "first"},

        {"eval.test", KeyType::text, ""},
        {"eval.run_dir", KeyType::text, ""},
        {"eval.max_distance", KeyType::integer, 6},
        {"eval.perturb_rates", KeyType::double_list, nlohmann::json::array()},
        {"eval.perturb_seed", KeyType::integer, 123},
        {"eval.gold_debug", KeyType::boolean, false},

        {"report.runs", KeyType::text_list, nlohmann::json::array()},
    };
    return keys;
}

const KeySpec& find_spec(const std::string& key) {
    for (const auto& spec : schema()) {
        if (key == spec.name) {
            return spec;
        }
    }
    throw ConfigError("unknown configuration key '" + key + "'");
}

void flatten(const nlohmann::json& node, const std::string& prefix,
             std::vector<std::pair<std::string, nlohmann::json>>& out) {
    if (node.is_object()) {
        bool treat_as_nested = true;
        // A dotted key stored literally wins over nesting.
        if (!prefix.empty()) {
            for (const auto& spec : schema()) {
                if (prefix == spec.name) {
                    treat_as_nested = false;
                    break;
                }
            }
        }
        if (treat_as_nested) {
            for (auto it = node.begin(); it != node.end(); ++it) {
                flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
            }
            return;
        }
    }
    out.emplace_back(prefix, node);
}

}  // namespace

RunConfig::RunConfig() {
    values_ = nlohmann::json::object();
    for (const auto& spec : schema()) {
        values_[spec.name] = spec.default_value;
    }
}

const std::vector<std::string>& RunConfig::known_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> out;
        for (const auto& spec : schema()) {
            out.push_back(spec.name);
        }
        return out;
    }();
    return keys;
}

void RunConfig::assign(const std::string& key, const nlohmann::json& value,
                       const std::string& origin) {
    const KeySpec& spec = find_spec(key);
    auto type_error = [&]() {
        throw ConfigError(origin + ": key '" + key + "' has the wrong type (got " +
                          std::string(value.type_name()) + ")");
    };
    switch (spec.type) {
        case KeyType::boolean:
            if (!value.is_boolean()) {
                type_error();
            }
            break;
        case KeyType::integer:
            if (!value.is_number_integer() && !value.is_number_unsigned()) {
                type_error();
            }
            break;
        case KeyType::floating:
            if (!value.is_number()) {
                type_error();
            }
            break;
        case KeyType::text:
            if (!value.is_string()) {
                type_error();
            }
            break;
        case KeyType::int_list:
        case KeyType::double_list:
        case KeyType::text_list:
            if (!value.is_array()) {
                type_error();
            }
            for (const auto& item : value) {
                if (spec.type == KeyType::int_list && !item.is_number_integer() &&
                    !item.is_number_unsigned()) {
                    type_error();
                }
                if (spec.type == KeyType::double_list && !item.is_number()) {
                    type_error();
                }
                if (spec.type == KeyType::text_list && !item.is_string()) {
                    type_error();
                }
            }
            break;
    }
    values_[key] = value;
}

RunConfig RunConfig::load_file(const std::string& path) {
    RunConfig config;
    config.merge_file(path);
    return config;
}

void RunConfig::merge_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config: cannot open '" + path + "'");
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
    if (!doc.is_object()) {
        throw ConfigError("config '" + path + "': top level must be an object");
    }
    std::vector<std::pair<std::string, nlohmann::json>> flat;
    flatten(doc, "", flat);
    for (const auto& [key, value] : flat) {
        assign(key, value, "config '" + path + "'");
    }
}

void RunConfig::set(const std::string& key, const std::string& value) {
    const KeySpec& spec = find_spec(key);
    auto parse_scalar = [&](const std::string& text, KeyType type) -> nlohmann::json {
        try {
            switch (type) {
                case KeyType::boolean:
                    if (text == "true" || text == "1") {
                        return true;
                    }
                    if (text == "false" || text == "0") {
                        return false;
                    }
                    throw ConfigError("");
                case KeyType::integer:
                    return static_cast<std::int64_t>(std::stoll(text));
                case KeyType::floating:
                    return std::stod(text);
                default:
                    return text;
            }
        } catch (...) {
            throw ConfigError("--set " + key + ": cannot parse '" + text + "'");
        }
    };
    switch (spec.type) {
        case KeyType::boolean:
        case KeyType::integer:
        case KeyType::floating:
        case KeyType::text:
            values_[key] = parse_scalar(value, spec.type);
            break;
        case KeyType::int_list:
        case KeyType::double_list:
        case KeyType::text_list: {
            nlohmann::json arr = nlohmann::json::array();
            std::string cur;
            auto push = [&]() {
                if (cur.empty()) {
                    return;
                }
                KeyType elem = spec.type == KeyType::int_list     ? KeyType::integer
                               : spec.type == KeyType::double_list ? KeyType::floating
                                                                    : KeyType::text;
                arr.push_back(parse_scalar(cur, elem));
                cur.clear();
            };
            for (char ch : value) {
                if (ch == ',') {
                    push();
                } else {
                    cur += ch;
                }
            }
            push();
            values_[key] = arr;
            break;
        }
    }
}

bool RunConfig::get_bool(const std::string& key) const {
    find_spec(key);
    return values_.at(key).get<bool>();
}

std::int64_t RunConfig::get_int(const std::string& key) const {
    find_spec(key);
    return values_.at(key).get<std::int64_t>();
}

std::size_t RunConfig::get_size(const std::string& key) const {
    std::int64_t v = get_int(key);
    if (v < 0) {
        throw ConfigError("key '" + key + "' must be non-negative, got " + std::to_string(v));
    }
    return static_cast<std::size_t>(v);
}

double RunConfig::get_double(const std::string& key) const {
    find_spec(key);
    return values_.at(key).get<double>();
}

std::string RunConfig::get_string(const std::string& key) const {
    find_spec(key);
    return values_.at(key).get<std::string>();
}

std::vector<std::int64_t> RunConfig::get_int_list(const std::string& key) const {
    find_spec(key);
    return values_.at(key).get<std::vector<std::int64_t>>();
}

std::vector<double> RunConfig::get_double_list(const std::string& key) const {
    find_spec(key);
    return values_.at(key).get<std::vector<double>>();
}

std::vector<std::string> RunConfig::get_string_list(const std::string& key) const {
    find_spec(key);
    return values_.at(key).get<std::vector<std::string>>();
}

nlohmann::json RunConfig::resolved() const { return values_; }

void RunConfig::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) {
        throw DataError("config: cannot write '" + path + "'");
    }
    out << values_.dump(2) << "\n";
}

}  // namespace pixeltext
