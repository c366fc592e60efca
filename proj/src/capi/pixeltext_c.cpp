#include "pixeltext.h"

#include <cstring>
#include <string>

#include "common/error.hpp"
#include "render/perturb.hpp"
#include "render/renderer.hpp"
#include "run/checkpoint.hpp"
#include "run/commands.hpp"
#include "run/config.hpp"

using namespace pixeltext;

namespace {

thread_local std::string g_last_error;

pxt_status status_of(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::config:
            return PXT_ERROR_CONFIG;
        case ErrorKind::data:
            return PXT_ERROR_DATA;
        case ErrorKind::numeric:
            return PXT_ERROR_NUMERIC;
        default:
            return PXT_ERROR_INTERNAL;
    }
}

template <typename Fn>
pxt_status guarded(Fn&& fn) {
    try {
        fn();
        return PXT_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return status_of(e);
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return PXT_ERROR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return PXT_ERROR_INTERNAL;
    }
}

pxt_status fail_config(const char* message) {
    g_last_error = message;
    return PXT_ERROR_CONFIG;
}

pxt_status copy_out(const std::string& value, char* buf, size_t buf_size) {
    if (buf == nullptr || buf_size == 0 || value.size() + 1 > buf_size) {
        g_last_error = "buffer too small (need " + std::to_string(value.size() + 1) +
                       " bytes)";
        return PXT_ERROR_CONFIG;
    }
    std::memcpy(buf, value.c_str(), value.size() + 1);
    return PXT_OK;
}

}  // namespace

struct pxt_config {
    RunConfig config;
};

struct pxt_rendering {
    Rendering rendering;
};

struct pxt_checkpoint {
    CheckpointData data;
};

extern "C" {

const char* pxt_version(void) { return "pixeltext 1.0.0"; }

const char* pxt_last_error(void) { return g_last_error.c_str(); }

pxt_status pxt_config_create(pxt_config** out) {
    if (!out) {
        return fail_config("pxt_config_create: out is NULL");
    }
    return guarded([&] { *out = new pxt_config(); });
}

pxt_status pxt_config_load(pxt_config* config, const char* path) {
    if (!config || !path) {
        return fail_config("pxt_config_load: NULL argument");
    }
    return guarded([&] { config->config.merge_file(path); });
}

pxt_status pxt_config_set(pxt_config* config, const char* key, const char* value) {
    if (!config || !key || !value) {
        return fail_config("pxt_config_set: NULL argument");
    }
    return guarded([&] { config->config.set(key, value); });
}

pxt_status pxt_config_get(const pxt_config* config, const char* key, char* buf,
                          size_t buf_size) {
    if (!config || !key) {
        return fail_config("pxt_config_get: NULL argument");
    }
    std::string value;
    pxt_status st = guarded([&] {
        nlohmann::json snapshot = config->config.resolved();
        if (!snapshot.contains(key)) {
            throw ConfigError("unknown configuration key '" + std::string(key) + "'");
        }
        const auto& v = snapshot.at(key);
        value = v.is_string() ? v.get<std::string>() : v.dump();
    });
    if (st != PXT_OK) {
        return st;
    }
    return copy_out(value, buf, buf_size);
}

void pxt_config_free(pxt_config* config) { delete config; }

pxt_status pxt_render_text(const char* text, uint32_t max_patches, pxt_rendering** out) {
    if (!text || !out) {
        return fail_config("pxt_render_text: NULL argument");
    }
    return guarded([&] {
        auto* handle = new pxt_rendering{render_text(text, max_patches)};
        *out = handle;
    });
}

pxt_status pxt_render_words(const char* const* words, size_t num_words,
                            uint32_t max_patches, pxt_rendering** out) {
    if (!words || !out) {
        return fail_config("pxt_render_words: NULL argument");
    }
    return guarded([&] {
        std::vector<std::string> list;
        list.reserve(num_words);
        for (size_t i = 0; i < num_words; ++i) {
            if (!words[i]) {
                throw ConfigError("pxt_render_words: word " + std::to_string(i) + " is NULL");
            }
            list.emplace_back(words[i]);
        }
        auto* handle = new pxt_rendering{render_words(list, max_patches)};
        *out = handle;
    });
}

uint32_t pxt_rendering_num_patches(const pxt_rendering* r) {
    return r ? static_cast<uint32_t>(r->rendering.max_patches) : 0;
}

uint32_t pxt_rendering_num_text_patches(const pxt_rendering* r) {
    return r ? static_cast<uint32_t>(r->rendering.num_text_patches) : 0;
}

uint32_t pxt_rendering_separator_index(const pxt_rendering* r) {
    return r ? static_cast<uint32_t>(r->rendering.separator_index) : 0;
}

int pxt_rendering_truncated(const pxt_rendering* r) {
    return (r && r->rendering.truncated) ? 1 : 0;
}

uint32_t pxt_rendering_num_words(const pxt_rendering* r) {
    if (!r || !r->rendering.word_spans) {
        return 0;
    }
    return static_cast<uint32_t>(r->rendering.word_spans->size());
}

pxt_status pxt_rendering_word_span(const pxt_rendering* r, uint32_t word, uint32_t* first,
                                   uint32_t* last) {
    if (!r || !first || !last) {
        return fail_config("pxt_rendering_word_span: NULL argument");
    }
    if (!r->rendering.word_spans || word >= r->rendering.word_spans->size()) {
        return fail_config("pxt_rendering_word_span: word index out of range");
    }
    *first = static_cast<uint32_t>((*r->rendering.word_spans)[word].first);
    *last = static_cast<uint32_t>((*r->rendering.word_spans)[word].second);
    return PXT_OK;
}

pxt_status pxt_rendering_copy_patches(const pxt_rendering* r, float* buf, size_t buf_len) {
    if (!r || !buf) {
        return fail_config("pxt_rendering_copy_patches: NULL argument");
    }
    if (buf_len < r->rendering.patches.size()) {
        return fail_config("pxt_rendering_copy_patches: buffer too small");
    }
    std::memcpy(buf, r->rendering.patches.data(),
                r->rendering.patches.size() * sizeof(float));
    return PXT_OK;
}

pxt_status pxt_rendering_copy_mask(const pxt_rendering* r, uint8_t* buf, size_t buf_len) {
    if (!r || !buf) {
        return fail_config("pxt_rendering_copy_mask: NULL argument");
    }
    if (buf_len < r->rendering.attention_mask.size()) {
        return fail_config("pxt_rendering_copy_mask: buffer too small");
    }
    std::memcpy(buf, r->rendering.attention_mask.data(), r->rendering.attention_mask.size());
    return PXT_OK;
}

pxt_status pxt_rendering_export_png(const pxt_rendering* r, const char* path) {
    if (!r || !path) {
        return fail_config("pxt_rendering_export_png: NULL argument");
    }
    return guarded([&] { export_png(r->rendering, path); });
}

void pxt_rendering_free(pxt_rendering* r) { delete r; }

pxt_status pxt_perturb_text(const char* text, double rate, uint64_t seed, char** out) {
    if (!text || !out) {
        return fail_config("pxt_perturb_text: NULL argument");
    }
    return guarded([&] {
        std::string result = perturb_text(text, rate, seed);
        char* buf = new char[result.size() + 1];
        std::memcpy(buf, result.c_str(), result.size() + 1);
        *out = buf;
    });
}

void pxt_string_free(char* s) { delete[] s; }

pxt_status pxt_run_pretrain(const pxt_config* config) {
    if (!config) {
        return fail_config("pxt_run_pretrain: config is NULL");
    }
    return guarded([&] { cmd_pretrain(config->config); });
}

pxt_status pxt_run_finetune(const pxt_config* config) {
    if (!config) {
        return fail_config("pxt_run_finetune: config is NULL");
    }
    return guarded([&] { cmd_finetune(config->config); });
}

pxt_status pxt_run_evaluate(const pxt_config* config) {
    if (!config) {
        return fail_config("pxt_run_evaluate: config is NULL");
    }
    return guarded([&] { cmd_evaluate(config->config); });
}

pxt_status pxt_run_render(const pxt_config* config) {
    if (!config) {
        return fail_config("pxt_run_render: config is NULL");
    }
    return guarded([&] { cmd_render(config->config); });
}

pxt_status pxt_run_report(const pxt_config* config) {
    if (!config) {
        return fail_config("pxt_run_report: config is NULL");
    }
    return guarded([&] { cmd_report(config->config); });
}

pxt_status pxt_checkpoint_open(const char* path, pxt_checkpoint** out) {
    if (!path || !out) {
        return fail_config("pxt_checkpoint_open: NULL argument");
    }
    return guarded([&] { *out = new pxt_checkpoint{load_checkpoint(path)}; });
}

uint32_t pxt_checkpoint_tensor_count(const pxt_checkpoint* c) {
    return c ? static_cast<uint32_t>(c->data.tensors.size()) : 0;
}

pxt_status pxt_checkpoint_tensor_name(const pxt_checkpoint* c, uint32_t index, char* buf,
                                      size_t buf_size) {
    if (!c) {
        return fail_config("pxt_checkpoint_tensor_name: checkpoint is NULL");
    }
    if (index >= c->data.tensors.size()) {
        return fail_config("pxt_checkpoint_tensor_name: index out of range");
    }
    return copy_out(c->data.tensors[index].name, buf, buf_size);
}

size_t pxt_checkpoint_tensor_size(const pxt_checkpoint* c, const char* name) {
    if (!c || !name) {
        return 0;
    }
    const CheckpointTensor* t = c->data.find(name);
    return t ? t->values.size() : 0;
}

void pxt_checkpoint_free(pxt_checkpoint* c) { delete c; }

}  // extern "C"
