#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace pixeltext {

// Byte-pair-encoding vocabulary over a character-level base inventory.
// Words are whitespace-pretokenized; every word ends in the end-of-word
// symbol so decoding can restore spaces. Ids are dense: specials, then the
// end-of-word symbol, then base characters sorted by code point, then merged
// symbols in training order.
struct BpeVocab {
    static constexpr const char* kPad = "<pad>";
    static constexpr const char* kUnk = "<unk>";
    static constexpr const char* kSep = "<sep>";
    static constexpr const char* kMask = "<mask>";
    static constexpr const char* kEndOfWord = "</w>";

    std::vector<std::string> id_to_symbol;
    std::unordered_map<std::string, int> symbol_to_id;
    std::vector<std::pair<std::string, std::string>> merges;  // in training order
    std::size_t base_size = 0;  // entries before the first merge

    int pad_id = 0;
    int unk_id = 1;
    int sep_id = 2;
    int mask_id = 3;

    std::size_t size() const { return id_to_symbol.size(); }
    int id_of(const std::string& symbol) const;

    void save_file(const std::string& path) const;
    std::string serialize() const;
    static BpeVocab load_file(const std::string& path);
    static BpeVocab parse(const std::string& content, const std::string& origin);
};

// Greedy highest-frequency pair merging until `vocab_size` symbols exist or
// no pair occurs twice. Ties break to the lexicographically smallest pair.
BpeVocab train_bpe(const std::vector<std::string>& corpus_lines, std::size_t vocab_size);

// Merge application in training order, per whitespace-separated word.
std::vector<int> encode_bpe(const std::string& text, const BpeVocab& vocab);
std::vector<std::vector<int>> encode_bpe_words(const std::vector<std::string>& words,
                                               const BpeVocab& vocab);

// Inverts encode_bpe for fully known, single-space-separated text.
std::string decode_bpe(const std::vector<int>& ids, const BpeVocab& vocab);

// Mean BPE tokens per word over the given lines (fragmentation measure).
double tokens_per_word(const std::vector<std::string>& lines, const BpeVocab& vocab);

}  // namespace pixeltext
