#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "render/perturb.hpp"

namespace pixeltext {

// One syntactic word (CoNLL-U basic token). Unset columns hold "_"; head -1
// means unannotated, 0 means the synthetic root.
struct Token {
    int id = 0;
    std::string form;
    std::string lemma = "_";
    std::string upos = "_";
    std::string xpos = "_";
    std::string feats = "_";
    int head = -1;
    std::string deprel = "_";
    std::string deps = "_";
    std::string misc = "_";

    bool has_upos() const { return upos != "_"; }
    bool has_head() const { return head >= 0; }
};

// Multiword-token ranges ("1-2 zum ...") and empty nodes ("3.1 ...") are
// preserved verbatim for round-tripping but excluded from the token list.
struct ExtraLine {
    std::size_t before_token = 0;  // index into tokens; lines re-emit before it
    std::string text;
};

struct Sentence {
    std::vector<std::string> comments;
    std::vector<Token> tokens;
    std::vector<ExtraLine> extras;

    std::vector<std::string> forms() const;
    bool fully_annotated() const;
    bool has_tags() const;
};

std::vector<Sentence> parse_conllu(std::istream& in);
std::vector<Sentence> parse_conllu_string(const std::string& content);
std::vector<Sentence> load_conllu(const std::string& path);

std::string serialize_conllu(const std::vector<Sentence>& sentences);
void save_conllu(const std::vector<Sentence>& sentences, const std::string& path);

// Copy with every token form perturbed (annotations untouched): the zero-shot
// dialect proxy. A perturbation that would empty a form keeps the original.
std::vector<Sentence> make_dialect_eval(const std::vector<Sentence>& sentences, double rate,
                                        std::uint64_t seed,
                                        const ConfusionTable& table =
                                            ConfusionTable::embedded());

}  // namespace pixeltext
