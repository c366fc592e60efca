#include "metrics/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "common/error.hpp"
#include "model/heads.hpp"

namespace pixeltext {

namespace {

// Walk aligned gold/pred tokens, calling visit(gold_token, pred_token).
template <typename Visitor>
std::size_t for_aligned_tokens(const std::vector<Sentence>& gold,
                               const std::vector<Sentence>& pred, Visitor&& visit) {
    if (gold.size() != pred.size()) {
        throw DataError("evaluation: " + std::to_string(gold.size()) + " gold vs " +
                        std::to_string(pred.size()) + " predicted sentences");
    }
    std::size_t tokens = 0;
    for (std::size_t s = 0; s < gold.size(); ++s) {
        if (gold[s].tokens.size() != pred[s].tokens.size()) {
            throw DataError("evaluation: sentence " + std::to_string(s + 1) +
                            " length mismatch");
        }
        for (std::size_t t = 0; t < gold[s].tokens.size(); ++t) {
            visit(gold[s].tokens[t], pred[s].tokens[t]);
            ++tokens;
        }
    }
    if (tokens == 0) {
        throw DataError("evaluation: empty corpus");
    }
    return tokens;
}

void require_head(const Token& token) {
    if (!token.has_head()) {
        throw DataError("evaluation: token '" + token.form + "' lacks a head annotation");
    }
}

}  // namespace

std::optional<double> CountPair::percent() const {
    if (total == 0) {
        return std::nullopt;
    }
    return 100.0 * static_cast<double>(correct) / static_cast<double>(total);
}

double tagging_accuracy(const std::vector<Sentence>& gold, const std::vector<Sentence>& pred) {
    std::size_t correct = 0;
    std::size_t total = for_aligned_tokens(gold, pred, [&](const Token& g, const Token& p) {
        if (!g.has_upos()) {
            throw DataError("evaluation: token '" + g.form + "' lacks a gold UPOS tag");
        }
        if (g.upos == p.upos) {
            ++correct;
        }
    });
    return 100.0 * static_cast<double>(correct) / static_cast<double>(total);
}

std::pair<double, double> uas_las(const std::vector<Sentence>& gold,
                                  const std::vector<Sentence>& pred) {
    std::size_t head_correct = 0;
    std::size_t both_correct = 0;
    std::size_t total = for_aligned_tokens(gold, pred, [&](const Token& g, const Token& p) {
        require_head(g);
        require_head(p);
        if (g.head == p.head) {
            ++head_correct;
            if (g.deprel == p.deprel) {
                ++both_correct;
            }
        }
    });
    return {100.0 * static_cast<double>(head_correct) / static_cast<double>(total),
            100.0 * static_cast<double>(both_correct) / static_cast<double>(total)};
}

std::map<std::string, CountPair> per_tag_accuracy(const std::vector<Sentence>& gold,
                                                  const std::vector<Sentence>& pred) {
    std::map<std::string, CountPair> stats;
    for (const char* tag : kUposTags) {
        stats[tag] = CountPair{};
    }
    for_aligned_tokens(gold, pred, [&](const Token& g, const Token& p) {
        auto it = stats.find(g.upos);
        if (it == stats.end()) {
            throw DataError("evaluation: unknown gold tag '" + g.upos + "'");
        }
        ++it->second.total;
        if (g.upos == p.upos) {
            ++it->second.correct;
        }
    });
    return stats;
}

std::vector<std::pair<std::string, CountPair>> las_by_distance(
    const std::vector<Sentence>& gold, const std::vector<Sentence>& pred,
    std::size_t max_distinct) {
    if (max_distinct == 0) {
        throw ConfigError("las_by_distance: need at least one distinct bucket");
    }
    std::vector<CountPair> buckets(max_distinct + 1);  // last = pooled overflow
    for_aligned_tokens(gold, pred, [&](const Token& g, const Token& p) {
        require_head(g);
        require_head(p);
        std::size_t distance =
            g.head == 0 ? static_cast<std::size_t>(g.id)
                        : static_cast<std::size_t>(std::abs(g.head - g.id));
        std::size_t bucket = distance >= max_distinct + 1 ? max_distinct : distance - 1;
        ++buckets[bucket].total;
        if (g.head == p.head && g.deprel == p.deprel) {
            ++buckets[bucket].correct;
        }
    });
    std::vector<std::pair<std::string, CountPair>> out;
    for (std::size_t b = 0; b < buckets.size(); ++b) {
        if (buckets[b].total == 0) {
            continue;  // absent, not zero
        }
        std::string name = b == max_distinct ? std::to_string(max_distinct + 1) + "+"
                                             : std::to_string(b + 1);
        out.emplace_back(name, buckets[b]);
    }
    return out;
}

double classification_accuracy(const std::vector<std::string>& gold,
                               const std::vector<std::string>& pred) {
    if (gold.empty()) {
        throw DataError("classification_accuracy: empty inputs");
    }
    if (gold.size() != pred.size()) {
        throw DataError("classification_accuracy: " + std::to_string(gold.size()) +
                        " gold vs " + std::to_string(pred.size()) + " predicted labels");
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (gold[i] == pred[i]) {
            ++correct;
        }
    }
    return 100.0 * static_cast<double>(correct) / static_cast<double>(gold.size());
}

std::pair<double, double> mean_std(const std::vector<double>& runs) {
    if (runs.empty()) {
        throw DataError("mean_std: no runs");
    }
    double mean = 0.0;
    for (double v : runs) {
        mean += v;
    }
    mean /= static_cast<double>(runs.size());
    if (runs.size() == 1) {
        return {mean, 0.0};
    }
    double ss = 0.0;
    for (double v : runs) {
        ss += (v - mean) * (v - mean);
    }
    return {mean, std::sqrt(ss / static_cast<double>(runs.size() - 1))};
}

std::string format_percent(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", value);
    return buf;
}

std::string render_table(const std::vector<std::vector<std::string>>& rows) {
    if (rows.empty()) {
        return "";
    }
    std::vector<std::size_t> widths;
    for (const auto& row : rows) {
        if (row.size() > widths.size()) {
            widths.resize(row.size(), 0);
        }
        for (std::size_t c = 0; c < row.size(); ++c) {
            widths[c] = std::max(widths[c], row[c].size());
        }
    }
    std::string out;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            std::string cell = rows[r][c];
            cell.resize(widths[c], ' ');
            out += cell;
            if (c + 1 < rows[r].size()) {
                out += "  ";
            }
        }
        while (!out.empty() && out.back() == ' ') {
            out.pop_back();
        }
        out += '\n';
        if (r == 0) {
            for (std::size_t c = 0; c < widths.size(); ++c) {
                out += std::string(widths[c], '-');
                if (c + 1 < widths.size()) {
                    out += "  ";
                }
            }
            out += '\n';
        }
    }
    return out;
}

}  // namespace pixeltext
