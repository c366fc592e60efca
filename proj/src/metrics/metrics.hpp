#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "io/conllu.hpp"

namespace pixeltext {

struct CountPair {
    std::size_t correct = 0;
    std::size_t total = 0;

    // Percent, or absent when the denominator is zero ("never occurs" is not
    // "always wrong").
    std::optional<double> percent() const;
};

// All metrics count every token, punctuation included.

double tagging_accuracy(const std::vector<Sentence>& gold, const std::vector<Sentence>& pred);

// (UAS, LAS): correct head / correct head and deprel, in percent.
std::pair<double, double> uas_las(const std::vector<Sentence>& gold,
                                  const std::vector<Sentence>& pred);

// Keyed by the 17 UPOS tags; tags absent from gold have total 0.
std::map<std::string, CountPair> per_tag_accuracy(const std::vector<Sentence>& gold,
                                                  const std::vector<Sentence>& pred);

// Dependency distance = |gold head id - token id|; root attachments use the
// token id. Buckets 1..max_distinct plus one pooled "N+" bucket; empty
// buckets are omitted.
std::vector<std::pair<std::string, CountPair>> las_by_distance(
    const std::vector<Sentence>& gold, const std::vector<Sentence>& pred,
    std::size_t max_distinct = 6);

double classification_accuracy(const std::vector<std::string>& gold,
                               const std::vector<std::string>& pred);

// (mean, sample standard deviation). n-1 denominator; 0 when n == 1.
std::pair<double, double> mean_std(const std::vector<double>& runs);

// One-decimal rendering used in reports ("95.2").
std::string format_percent(double value);

// Aligned plain-text table; first row is the header.
std::string render_table(const std::vector<std::vector<std::string>>& rows);

}  // namespace pixeltext
