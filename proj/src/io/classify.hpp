#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace pixeltext {

struct LabeledText {
    std::string text;
    std::string label;
    std::string variety;  // split key, e.g. standard vs dialect
};

// Closed label inventory, frozen at training time. Order is lexicographic so
// it is independent of record order.
struct LabelSet {
    std::vector<std::string> labels;

    static LabelSet from_records(const std::vector<LabeledText>& records);
    int index_of(const std::string& label) const;  // throws on unknown labels
    std::size_t size() const { return labels.size(); }
};

// Formats: "tsv" (text <tab> label [<tab> variety]) or "jsonl" (one JSON
// object per line with fields text, label, optional variety).
std::vector<LabeledText> load_classification(std::istream& in, const std::string& format);
// Format chosen by extension: .tsv / .jsonl.
std::vector<LabeledText> load_classification_file(const std::string& path);

struct DatasetSplit {
    std::vector<LabeledText> train;
    std::vector<LabeledText> dev;
    std::vector<LabeledText> test;
};

// Deterministic 80:10:10 split by seeded shuffle; splits are disjoint and
// cover every record.
DatasetSplit split_dataset(const std::vector<LabeledText>& records, std::uint64_t seed);

}  // namespace pixeltext
