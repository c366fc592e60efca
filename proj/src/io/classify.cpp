#include "io/classify.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace pixeltext {

LabelSet LabelSet::from_records(const std::vector<LabeledText>& records) {
    std::set<std::string> seen;
    for (const auto& r : records) {
        seen.insert(r.label);
    }
    LabelSet set;
    set.labels.assign(seen.begin(), seen.end());
    return set;
}

int LabelSet::index_of(const std::string& label) const {
    auto it = std::lower_bound(labels.begin(), labels.end(), label);
    if (it == labels.end() || *it != label) {
        throw DataError("label '" + label + "' is not in the frozen training label set");
    }
    return static_cast<int>(it - labels.begin());
}

std::vector<LabeledText> load_classification(std::istream& in, const std::string& format) {
    std::vector<LabeledText> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        LabeledText record;
        if (format == "tsv") {
            std::vector<std::string> cols;
            std::string cur;
            for (char ch : line) {
                if (ch == '\t') {
                    cols.push_back(cur);
                    cur.clear();
                } else {
                    cur += ch;
                }
            }
            cols.push_back(cur);
            if (cols.size() != 2 && cols.size() != 3) {
                throw DataError("classification tsv line " + std::to_string(line_no) +
                                ": expected 2 or 3 columns, got " +
                                std::to_string(cols.size()));
            }
            record.text = cols[0];
            record.label = cols[1];
            record.variety = cols.size() == 3 ? cols[2] : "";
        } else if (format == "jsonl") {
            nlohmann::json obj;
            try {
                obj = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                throw DataError("classification jsonl line " + std::to_string(line_no) + ": " +
                                e.what());
            }
            if (!obj.contains("text") || !obj.contains("label")) {
                throw DataError("classification jsonl line " + std::to_string(line_no) +
                                ": records need 'text' and 'label' fields");
            }
            record.text = obj["text"].get<std::string>();
            record.label = obj["label"].get<std::string>();
            record.variety = obj.value("variety", "");
        } else {
            throw ConfigError("load_classification: unknown format '" + format + "'");
        }
        if (record.label.empty()) {
            throw DataError("classification line " + std::to_string(line_no) + ": empty label");
        }
        records.push_back(std::move(record));
    }
    return records;
}

std::vector<LabeledText> load_classification_file(const std::string& path) {
    std::string format;
    if (path.size() > 4 && path.substr(path.size() - 4) == ".tsv") {
        format = "tsv";
    } else if (path.size() > 6 && path.substr(path.size() - 6) == ".jsonl") {
        format = "jsonl";
    } else {
        throw ConfigError("load_classification: cannot infer format from '" + path +
                          "' (expected .tsv or .jsonl)");
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("classification: cannot open '" + path + "'");
    }
    return load_classification(in, format);
}

DatasetSplit split_dataset(const std::vector<LabeledText>& records, std::uint64_t seed) {
    std::vector<std::size_t> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    Rng rng(seed, RngStream::shuffling);
    rng.shuffle(order);
    std::size_t n = records.size();
    std::size_t n_train = n * 8 / 10;
    std::size_t n_dev = n / 10;
    DatasetSplit split;
    for (std::size_t i = 0; i < n; ++i) {
        const LabeledText& r = records[order[i]];
        if (i < n_train) {
            split.train.push_back(r);
        } else if (i < n_train + n_dev) {
            split.dev.push_back(r);
        } else {
            split.test.push_back(r);
        }
    }
    return split;
}

}  // namespace pixeltext
