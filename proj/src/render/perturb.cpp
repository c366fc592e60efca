#include "render/perturb.hpp"

#include <fstream>
#include <sstream>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "common/utf8.hpp"

namespace pixeltext {

namespace {

// Umlaut/vowel swaps, consonant voicing pairs, doubling and h-insertion;
// a stand-in for dialectal spelling variation, not a linguistic model.
const char kDefaultTable[] =
    "PXCT v1\n"
    "ops\tsubstitute duplicate delete\n"
    "sub\ta\t\xc3\xa4 ah aa\n"
    "sub\te\t\xc3\xa4 eh ee i\n"
    "sub\ti\ty ie ih\n"
    "sub\to\t\xc3\xb6 oh oo u\n"
    "sub\tu\t\xc3\xbc uh ue o\n"
    "sub\t\xc3\xa4\ta e\n"
    "sub\t\xc3\xb6\to e\n"
    "sub\t\xc3\xbc\tu i\n"
    "sub\tA\t\xc3\x84 Ah\n"
    "sub\tE\t\xc3\x84 Eh\n"
    "sub\tO\t\xc3\x96 Oh\n"
    "sub\tU\t\xc3\x9c Uh\n"
    "sub\t\xc3\x84\tA E\n"
    "sub\t\xc3\x96\tO\n"
    "sub\t\xc3\x9c\tU\n"
    "sub\ts\t\xc3\x9f z\n"
    "sub\t\xc3\x9f\ts ss\n"
    "sub\tz\ts tz\n"
    "sub\tb\tp\n"
    "sub\tp\tb\n"
    "sub\td\tt\n"
    "sub\tt\td th\n"
    "sub\tg\tk ch\n"
    "sub\tk\tg ck\n"
    "sub\tv\tw f\n"
    "sub\tw\tv\n"
    "sub\tf\tv\n"
    "sub\tc\tk\n";

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    parts.push_back(cur);
    return parts;
}

}  // namespace

ConfusionTable ConfusionTable::parse(const std::string& content, const std::string& origin) {
    std::istringstream in(content);
    std::string line;
    if (!std::getline(in, line) || line.rfind("PXCT ", 0) != 0) {
        throw DataError("confusion table " + origin + ": missing PXCT header");
    }
    ConfusionTable table;
    table.version = line.substr(5);
    bool ops_seen = false;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        auto fields = split(line, '\t');
        if (fields[0] == "ops") {
            if (fields.size() != 2) {
                throw DataError("confusion table " + origin + ": bad ops line " +
                                std::to_string(line_no));
            }
            table.op_substitute = table.op_duplicate = table.op_delete = false;
            for (const auto& op : split(fields[1], ' ')) {
                if (op == "substitute") {
                    table.op_substitute = true;
                } else if (op == "duplicate") {
                    table.op_duplicate = true;
                } else if (op == "delete") {
                    table.op_delete = true;
                } else if (!op.empty()) {
                    throw DataError("confusion table " + origin + ": unknown op '" + op + "'");
                }
            }
            ops_seen = true;
        } else if (fields[0] == "sub") {
            if (fields.size() != 3) {
                throw DataError("confusion table " + origin + ": bad sub line " +
                                std::to_string(line_no));
            }
            auto key = decode_utf8(fields[1]);
            if (key.size() != 1) {
                throw DataError("confusion table " + origin +
                                ": sub key must be a single character, line " +
                                std::to_string(line_no));
            }
            std::vector<std::u32string> candidates;
            for (const auto& cand : split(fields[2], ' ')) {
                if (cand.empty()) {
                    continue;
                }
                auto cps = decode_utf8(cand);
                candidates.emplace_back(cps.begin(), cps.end());
            }
            if (candidates.empty()) {
                throw DataError("confusion table " + origin + ": empty candidate list, line " +
                                std::to_string(line_no));
            }
            table.substitutions[key[0]] = std::move(candidates);
        } else {
            throw DataError("confusion table " + origin + ": unknown record '" + fields[0] +
                            "' at line " + std::to_string(line_no));
        }
    }
    if (!ops_seen) {
        throw DataError("confusion table " + origin + ": missing ops line");
    }
    if (table.enabled_op_count() == 0) {
        throw DataError("confusion table " + origin + ": no operations enabled");
    }
    return table;
}

const ConfusionTable& ConfusionTable::embedded() {
    static const ConfusionTable table = parse(kDefaultTable, "embedded-default-v1");
    return table;
}

ConfusionTable ConfusionTable::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("confusion table: cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path);
}

std::string perturb_text(const std::string& text, double rate, std::uint64_t seed,
                         const ConfusionTable& table) {
    if (rate < 0.0 || rate > 1.0) {
        throw ConfigError("perturb_text: rate must lie in [0, 1], got " + std::to_string(rate));
    }
    Rng rng(seed, RngStream::perturbation);
    std::vector<char32_t> cps = decode_utf8(text);
    std::vector<char32_t> out;
    out.reserve(cps.size());

    enum Op : std::uint32_t { kSubstitute, kDuplicate, kDelete };
    std::vector<Op> ops;
    if (table.op_substitute) {
        ops.push_back(kSubstitute);
    }
    if (table.op_duplicate) {
        ops.push_back(kDuplicate);
    }
    if (table.op_delete) {
        ops.push_back(kDelete);
    }

    for (char32_t cp : cps) {
        if (rate == 0.0 || rng.uniform_double() >= rate) {
            out.push_back(cp);
            continue;
        }
        Op op = ops[rng.below(static_cast<std::uint32_t>(ops.size()))];
        switch (op) {
            case kSubstitute: {
                auto it = table.substitutions.find(cp);
                if (it == table.substitutions.end()) {
                    out.push_back(cp);
                } else {
                    const auto& cand =
                        it->second[rng.below(static_cast<std::uint32_t>(it->second.size()))];
                    out.insert(out.end(), cand.begin(), cand.end());
                }
                break;
            }
            case kDuplicate:
                out.push_back(cp);
                out.push_back(cp);
                break;
            case kDelete:
                break;
        }
    }
    return encode_utf8(out);
}

}  // namespace pixeltext
