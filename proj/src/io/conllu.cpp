#include "io/conllu.hpp"

#include <fstream>
#include <sstream>

#include "common/error.hpp"
#include "model/heads.hpp"

namespace pixeltext {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
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
    return cols;
}

bool all_digits(const std::string& s) {
    if (s.empty()) {
        return false;
    }
    for (char ch : s) {
        if (ch < '0' || ch > '9') {
            return false;
        }
    }
    return true;
}

[[noreturn]] void fail(std::size_t line_no, const std::string& message) {
    throw DataError("conllu line " + std::to_string(line_no) + ": " + message);
}

void validate_sentence(const Sentence& sentence, std::size_t line_no) {
    int n = static_cast<int>(sentence.tokens.size());
    std::size_t roots = 0;
    bool all_heads = true;
    for (const Token& token : sentence.tokens) {
        if (token.has_head()) {
            if (token.head > n) {
                fail(line_no, "head " + std::to_string(token.head) +
                                  " dangles beyond sentence length " + std::to_string(n));
            }
            if (token.head == token.id) {
                fail(line_no, "token " + std::to_string(token.id) + " is its own head");
            }
            if (token.head == 0) {
                ++roots;
                if (token.deprel != "root") {
                    fail(line_no, "token attached to the root must carry deprel 'root'");
                }
            }
        } else {
            all_heads = false;
        }
    }
    if (all_heads && roots != 1) {
        fail(line_no, "fully annotated sentence has " + std::to_string(roots) +
                          " root attachments, expected exactly 1");
    }
}

}  // namespace

std::vector<std::string> Sentence::forms() const {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const Token& t : tokens) {
        out.push_back(t.form);
    }
    return out;
}

bool Sentence::fully_annotated() const {
    for (const Token& t : tokens) {
        if (!t.has_head()) {
            return false;
        }
    }
    return !tokens.empty();
}

bool Sentence::has_tags() const {
    for (const Token& t : tokens) {
        if (!t.has_upos()) {
            return false;
        }
    }
    return !tokens.empty();
}

std::vector<Sentence> parse_conllu(std::istream& in) {
    std::vector<Sentence> sentences;
    Sentence current;
    bool in_sentence = false;
    std::size_t line_no = 0;
    std::string line;

    auto flush = [&]() {
        if (in_sentence) {
            if (current.tokens.empty()) {
                fail(line_no, "sentence has comments or ranges but no tokens");
            }
            validate_sentence(current, line_no);
            sentences.push_back(std::move(current));
            current = Sentence{};
            in_sentence = false;
        }
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            flush();
            continue;
        }
        in_sentence = true;
        if (line[0] == '#') {
            current.comments.push_back(line);
            continue;
        }
        auto cols = split_tabs(line);
        if (cols.size() != 10) {
            fail(line_no, "expected 10 tab-separated columns, got " +
                              std::to_string(cols.size()));
        }
        const std::string& id_col = cols[0];
        if (id_col.find('-') != std::string::npos || id_col.find('.') != std::string::npos) {
            // Multiword-token range or empty node: preserved, not a token.
            current.extras.push_back({current.tokens.size(), line});
            continue;
        }
        if (!all_digits(id_col)) {
            fail(line_no, "malformed token id '" + id_col + "'");
        }
        Token token;
        token.id = std::stoi(id_col);
        if (token.id != static_cast<int>(current.tokens.size()) + 1) {
            fail(line_no, "token ids must be contiguous from 1; got " + id_col + " at position " +
                              std::to_string(current.tokens.size() + 1));
        }
        token.form = cols[1];
        token.lemma = cols[2];
        token.upos = cols[3];
        token.xpos = cols[4];
        token.feats = cols[5];
        if (cols[6] == "_") {
            token.head = -1;
        } else if (all_digits(cols[6])) {
            token.head = std::stoi(cols[6]);
        } else {
            fail(line_no, "malformed head '" + cols[6] + "'");
        }
        token.deprel = cols[7];
        token.deps = cols[8];
        token.misc = cols[9];
        if (token.form.empty()) {
            fail(line_no, "empty form column");
        }
        if (token.has_upos() && upos_index(token.upos) < 0) {
            fail(line_no, "unknown UPOS tag '" + token.upos + "'");
        }
        current.tokens.push_back(std::move(token));
    }
    flush();
    return sentences;
}

std::vector<Sentence> parse_conllu_string(const std::string& content) {
    std::istringstream in(content);
    return parse_conllu(in);
}

std::vector<Sentence> load_conllu(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("conllu: cannot open '" + path + "'");
    }
    return parse_conllu(in);
}

std::string serialize_conllu(const std::vector<Sentence>& sentences) {
    std::ostringstream out;
    for (const Sentence& sentence : sentences) {
        for (const auto& comment : sentence.comments) {
            out << comment << "\n";
        }
        std::size_t extra = 0;
        for (std::size_t i = 0; i <= sentence.tokens.size(); ++i) {
            while (extra < sentence.extras.size() &&
                   sentence.extras[extra].before_token == i) {
                out << sentence.extras[extra].text << "\n";
                ++extra;
            }
            if (i == sentence.tokens.size()) {
                break;
            }
            const Token& t = sentence.tokens[i];
            out << t.id << "\t" << t.form << "\t" << t.lemma << "\t" << t.upos << "\t"
                << t.xpos << "\t" << t.feats << "\t"
                << (t.has_head() ? std::to_string(t.head) : "_") << "\t" << t.deprel << "\t"
                << t.deps << "\t" << t.misc << "\n";
        }
        out << "\n";
    }
    return out.str();
}

void save_conllu(const std::vector<Sentence>& sentences, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("conllu: cannot write '" + path + "'");
    }
    out << serialize_conllu(sentences);
    if (!out) {
        throw DataError("conllu: write failed for '" + path + "'");
    }
}

std::vector<Sentence> make_dialect_eval(const std::vector<Sentence>& sentences, double rate,
                                        std::uint64_t seed, const ConfusionTable& table) {
    if (rate < 0.0 || rate > 1.0) {
        throw ConfigError("make_dialect_eval: rate must lie in [0, 1]");
    }
    std::vector<Sentence> out = sentences;
    std::uint64_t counter = 0;
    for (Sentence& sentence : out) {
        for (Token& token : sentence.tokens) {
            std::string perturbed = perturb_text(token.form, rate, seed + counter, table);
            ++counter;
            if (!perturbed.empty()) {
                token.form = std::move(perturbed);
            }
        }
    }
    return out;
}

}  // namespace pixeltext
