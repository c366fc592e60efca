#include "bpe/bpe.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "common/error.hpp"
#include "common/utf8.hpp"

namespace pixeltext {

namespace {

const char* kMergeSeparator = "\xe2\x96\x81";  // U+2581, separates merge halves on disk

std::vector<std::string> whitespace_words(const std::string& line) {
    std::vector<std::string> words;
    std::string cur;
    for (char ch : line) {
        if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r') {
            if (!cur.empty()) {
                words.push_back(cur);
                cur.clear();
            }
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) {
        words.push_back(cur);
    }
    return words;
}

std::vector<std::string> word_symbols(const std::string& word) {
    std::vector<std::string> symbols;
    for (char32_t cp : decode_utf8(word)) {
        std::string s;
        append_utf8(s, cp);
        symbols.push_back(std::move(s));
    }
    symbols.push_back(BpeVocab::kEndOfWord);
    return symbols;
}

void apply_merges(std::vector<std::string>& symbols, const BpeVocab& vocab) {
    for (const auto& [left, right] : vocab.merges) {
        for (std::size_t i = 0; i + 1 < symbols.size();) {
            if (symbols[i] == left && symbols[i + 1] == right) {
                symbols[i] = left + right;
                symbols.erase(symbols.begin() + static_cast<std::ptrdiff_t>(i) + 1);
            } else {
                ++i;
            }
        }
    }
}

std::vector<int> symbols_to_ids(const std::vector<std::string>& symbols,
                                const BpeVocab& vocab) {
    std::vector<int> ids;
    ids.reserve(symbols.size());
    for (const auto& s : symbols) {
        auto it = vocab.symbol_to_id.find(s);
        ids.push_back(it != vocab.symbol_to_id.end() ? it->second : vocab.unk_id);
    }
    return ids;
}

}  // namespace

int BpeVocab::id_of(const std::string& symbol) const {
    auto it = symbol_to_id.find(symbol);
    if (it == symbol_to_id.end()) {
        throw DataError("bpe: unknown symbol '" + symbol + "'");
    }
    return it->second;
}

BpeVocab train_bpe(const std::vector<std::string>& corpus_lines, std::size_t vocab_size) {
    std::map<std::string, std::size_t> word_freq;
    for (const auto& line : corpus_lines) {
        for (auto& w : whitespace_words(line)) {
            ++word_freq[w];
        }
    }
    if (word_freq.empty()) {
        throw DataError("train_bpe: corpus contains no words");
    }

    BpeVocab vocab;
    auto add_symbol = [&](const std::string& s) {
        vocab.symbol_to_id[s] = static_cast<int>(vocab.id_to_symbol.size());
        vocab.id_to_symbol.push_back(s);
    };
    add_symbol(BpeVocab::kPad);
    add_symbol(BpeVocab::kUnk);
    add_symbol(BpeVocab::kSep);
    add_symbol(BpeVocab::kMask);
    add_symbol(BpeVocab::kEndOfWord);

    std::set<char32_t> alphabet;
    for (const auto& [word, freq] : word_freq) {
        for (char32_t cp : decode_utf8(word)) {
            alphabet.insert(cp);
        }
    }
    for (char32_t cp : alphabet) {
        std::string s;
        append_utf8(s, cp);
        add_symbol(s);
    }
    vocab.base_size = vocab.id_to_symbol.size();
    if (vocab_size < vocab.base_size) {
        throw ConfigError("train_bpe: vocab_size " + std::to_string(vocab_size) +
                          " is below the base inventory size " +
                          std::to_string(vocab.base_size));
    }

    std::vector<std::vector<std::string>> words;
    std::vector<std::size_t> freqs;
    for (const auto& [word, freq] : word_freq) {
        words.push_back(word_symbols(word));
        freqs.push_back(freq);
    }

    while (vocab.size() < vocab_size) {
        std::map<std::pair<std::string, std::string>, std::size_t> pair_count;
        for (std::size_t w = 0; w < words.size(); ++w) {
            const auto& syms = words[w];
            for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
                pair_count[{syms[i], syms[i + 1]}] += freqs[w];
            }
        }
        // std::map iteration gives the lexicographically smallest pair first,
        // which is exactly the documented tie-break.
        std::pair<std::string, std::string> best;
        std::size_t best_count = 0;
        for (const auto& [pair, count] : pair_count) {
            if (count > best_count) {
                best = pair;
                best_count = count;
            }
        }
        if (best_count < 2) {
            break;  // no pair repeats
        }
        vocab.merges.push_back(best);
        add_symbol(best.first + best.second);
        for (auto& syms : words) {
            for (std::size_t i = 0; i + 1 < syms.size();) {
                if (syms[i] == best.first && syms[i + 1] == best.second) {
                    syms[i] = best.first + best.second;
                    syms.erase(syms.begin() + static_cast<std::ptrdiff_t>(i) + 1);
                } else {
                    ++i;
                }
            }
        }
    }
    return vocab;
}

std::vector<int> encode_bpe(const std::string& text, const BpeVocab& vocab) {
    std::vector<int> ids;
    for (const auto& word : whitespace_words(text)) {
        auto symbols = word_symbols(word);
        apply_merges(symbols, vocab);
        auto word_ids = symbols_to_ids(symbols, vocab);
        ids.insert(ids.end(), word_ids.begin(), word_ids.end());
    }
    return ids;
}

std::vector<std::vector<int>> encode_bpe_words(const std::vector<std::string>& words,
                                               const BpeVocab& vocab) {
    std::vector<std::vector<int>> out;
    out.reserve(words.size());
    for (const auto& word : words) {
        auto symbols = word_symbols(word);
        apply_merges(symbols, vocab);
        out.push_back(symbols_to_ids(symbols, vocab));
    }
    return out;
}

std::string decode_bpe(const std::vector<int>& ids, const BpeVocab& vocab) {
    std::string text;
    for (int id : ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= vocab.size()) {
            throw DataError("decode_bpe: id " + std::to_string(id) + " out of range [0," +
                            std::to_string(vocab.size()) + ")");
        }
        const std::string& symbol = vocab.id_to_symbol[static_cast<std::size_t>(id)];
        if (symbol == BpeVocab::kPad || symbol == BpeVocab::kSep ||
            symbol == BpeVocab::kMask) {
            continue;
        }
        text += symbol;
    }
    // Every end-of-word marker becomes a space; the trailing one is dropped.
    const std::string eow = BpeVocab::kEndOfWord;
    std::string out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t hit = text.find(eow, pos);
        if (hit == std::string::npos) {
            out += text.substr(pos);
            break;
        }
        out += text.substr(pos, hit - pos);
        out += ' ';
        pos = hit + eow.size();
    }
    if (!out.empty() && out.back() == ' ') {
        out.pop_back();
    }
    return out;
}

double tokens_per_word(const std::vector<std::string>& lines, const BpeVocab& vocab) {
    std::size_t tokens = 0;
    std::size_t words = 0;
    for (const auto& line : lines) {
        for (const auto& word : whitespace_words(line)) {
            auto symbols = word_symbols(word);
            apply_merges(symbols, vocab);
            tokens += symbols.size();
            ++words;
        }
    }
    if (words == 0) {
        throw DataError("tokens_per_word: no words");
    }
    return static_cast<double>(tokens) / static_cast<double>(words);
}

std::string BpeVocab::serialize() const {
    std::ostringstream out;
    out << "PXBPE v1\n";
    out << "base " << base_size << "\n";
    for (std::size_t i = 0; i < base_size; ++i) {
        const std::string& s = id_to_symbol[i];
        if (s.find(kMergeSeparator) != std::string::npos) {
            throw DataError("bpe: symbol contains the merge separator, cannot serialize");
        }
        out << s << "\n";
    }
    out << "merges " << merges.size() << "\n";
    for (const auto& [left, right] : merges) {
        out << left << kMergeSeparator << right << "\n";
    }
    return out.str();
}

void BpeVocab::save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("bpe: cannot write '" + path + "'");
    }
    out << serialize();
    if (!out) {
        throw DataError("bpe: write failed for '" + path + "'");
    }
}

BpeVocab BpeVocab::parse(const std::string& content, const std::string& origin) {
    std::istringstream in(content);
    std::string line;
    if (!std::getline(in, line) || line != "PXBPE v1") {
        throw DataError("bpe vocabulary " + origin + ": missing PXBPE v1 header");
    }
    auto read_count = [&](const char* tag) -> std::size_t {
        if (!std::getline(in, line) || line.rfind(std::string(tag) + " ", 0) != 0) {
            throw DataError("bpe vocabulary " + origin + ": expected '" + tag + " <n>' line");
        }
        return static_cast<std::size_t>(std::stoul(line.substr(std::string(tag).size() + 1)));
    };

    BpeVocab vocab;
    std::size_t n_base = read_count("base");
    for (std::size_t i = 0; i < n_base; ++i) {
        if (!std::getline(in, line)) {
            throw DataError("bpe vocabulary " + origin + ": truncated base section");
        }
        vocab.symbol_to_id[line] = static_cast<int>(vocab.id_to_symbol.size());
        vocab.id_to_symbol.push_back(line);
    }
    vocab.base_size = vocab.id_to_symbol.size();
    std::size_t n_merges = read_count("merges");
    for (std::size_t i = 0; i < n_merges; ++i) {
        if (!std::getline(in, line)) {
            throw DataError("bpe vocabulary " + origin + ": truncated merges section");
        }
        std::size_t sep = line.find(kMergeSeparator);
        if (sep == std::string::npos) {
            throw DataError("bpe vocabulary " + origin + ": merge line lacks separator");
        }
        std::string left = line.substr(0, sep);
        std::string right = line.substr(sep + std::string(kMergeSeparator).size());
        vocab.merges.emplace_back(left, right);
        std::string merged = left + right;
        vocab.symbol_to_id[merged] = static_cast<int>(vocab.id_to_symbol.size());
        vocab.id_to_symbol.push_back(merged);
    }
    vocab.pad_id = vocab.id_of(kPad);
    vocab.unk_id = vocab.id_of(kUnk);
    vocab.sep_id = vocab.id_of(kSep);
    vocab.mask_id = vocab.id_of(kMask);
    return vocab;
}

BpeVocab BpeVocab::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("bpe: cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path);
}

}  // namespace pixeltext
