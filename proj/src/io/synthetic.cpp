#include "io/synthetic.hpp"

#include "common/rng.hpp"

namespace pixeltext {

namespace {

const std::vector<std::string> kDets = {"der", "die", "das", "ein", "eine"};
const std::vector<std::string> kAdjs = {"große", "kleine", "alte", "junge", "schöne", "müde"};
const std::vector<std::string> kNouns = {"Hund",  "Katze", "Frau",  "Mann",   "Kind",
                                         "Haus",  "Buch",  "Stadt", "Straße", "Bäcker",
                                         "Vogel", "Tür"};
const std::vector<std::string> kVerbsTrans = {"sieht", "liest", "kauft", "sucht", "findet",
                                              "hört"};
const std::vector<std::string> kVerbsIntrans = {"schläft", "lacht", "wartet", "träumt",
                                                "läuft"};
const std::vector<std::string> kAdvs = {"heute", "gern", "oft", "leise", "überall"};
const std::vector<std::string> kPunct = {".", "!", "?"};

const std::vector<std::string> kRelations = {"advmod", "amod", "det",  "nsubj",
                                             "obj",    "punct", "root"};

std::string pick(const std::vector<std::string>& pool, Rng& rng) {
    return pool[rng.below(static_cast<std::uint32_t>(pool.size()))];
}

Token make_token(int id, std::string form, const char* upos, int head, const char* rel) {
    Token t;
    t.id = id;
    t.form = std::move(form);
    t.upos = upos;
    t.head = head;
    t.deprel = rel;
    return t;
}

Sentence make_sentence(std::size_t index, Rng& rng) {
    Sentence s;
    s.comments.push_back("# sent_id = synth-" + std::to_string(index + 1));
    switch (rng.below(5)) {
        case 0:  // Der Hund schläft .
            s.tokens.push_back(make_token(1, pick(kDets, rng), "DET", 2, "det"));
            s.tokens.push_back(make_token(2, pick(kNouns, rng), "NOUN", 3, "nsubj"));
            s.tokens.push_back(make_token(3, pick(kVerbsIntrans, rng), "VERB", 0, "root"));
            s.tokens.push_back(make_token(4, pick(kPunct, rng), "PUNCT", 3, "punct"));
            break;
        case 1:  // Die kleine Katze lacht .
            s.tokens.push_back(make_token(1, pick(kDets, rng), "DET", 3, "det"));
            s.tokens.push_back(make_token(2, pick(kAdjs, rng), "ADJ", 3, "amod"));
            s.tokens.push_back(make_token(3, pick(kNouns, rng), "NOUN", 4, "nsubj"));
            s.tokens.push_back(make_token(4, pick(kVerbsIntrans, rng), "VERB", 0, "root"));
            s.tokens.push_back(make_token(5, pick(kPunct, rng), "PUNCT", 4, "punct"));
            break;
        case 2:  // Der Mann liest ein Buch .
            s.tokens.push_back(make_token(1, pick(kDets, rng), "DET", 2, "det"));
            s.tokens.push_back(make_token(2, pick(kNouns, rng), "NOUN", 3, "nsubj"));
            s.tokens.push_back(make_token(3, pick(kVerbsTrans, rng), "VERB", 0, "root"));
            s.tokens.push_back(make_token(4, pick(kDets, rng), "DET", 5, "det"));
            s.tokens.push_back(make_token(5, pick(kNouns, rng), "NOUN", 3, "obj"));
            s.tokens.push_back(make_token(6, pick(kPunct, rng), "PUNCT", 3, "punct"));
            break;
        case 3:  // Das Kind wartet oft .
            s.tokens.push_back(make_token(1, pick(kDets, rng), "DET", 2, "det"));
            s.tokens.push_back(make_token(2, pick(kNouns, rng), "NOUN", 3, "nsubj"));
            s.tokens.push_back(make_token(3, pick(kVerbsIntrans, rng), "VERB", 0, "root"));
            s.tokens.push_back(make_token(4, pick(kAdvs, rng), "ADV", 3, "advmod"));
            s.tokens.push_back(make_token(5, pick(kPunct, rng), "PUNCT", 3, "punct"));
            break;
        default:  // Die alte Frau sucht das kleine Haus .
            s.tokens.push_back(make_token(1, pick(kDets, rng), "DET", 3, "det"));
            s.tokens.push_back(make_token(2, pick(kAdjs, rng), "ADJ", 3, "amod"));
            s.tokens.push_back(make_token(3, pick(kNouns, rng), "NOUN", 4, "nsubj"));
            s.tokens.push_back(make_token(4, pick(kVerbsTrans, rng), "VERB", 0, "root"));
            s.tokens.push_back(make_token(5, pick(kDets, rng), "DET", 7, "det"));
            s.tokens.push_back(make_token(6, pick(kAdjs, rng), "ADJ", 7, "amod"));
            s.tokens.push_back(make_token(7, pick(kNouns, rng), "NOUN", 4, "obj"));
            s.tokens.push_back(make_token(8, pick(kPunct, rng), "PUNCT", 4, "punct"));
            break;
    }
    return s;
}

}  // namespace

const std::vector<std::string>& synthetic_relations() { return kRelations; }

std::vector<Sentence> synthetic_treebank(std::size_t count, std::uint64_t seed) {
    Rng rng(seed, RngStream::synthesis);
    std::vector<Sentence> sentences;
    sentences.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        sentences.push_back(make_sentence(i, rng));
    }
    return sentences;
}

std::vector<std::string> synthetic_text_lines(std::size_t count, std::uint64_t seed) {
    Rng rng(seed, RngStream::synthesis);
    std::vector<std::string> lines;
    lines.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Sentence s = make_sentence(i, rng);
        std::string line;
        for (std::size_t t = 0; t < s.tokens.size(); ++t) {
            if (t) {
                line += ' ';
            }
            line += s.tokens[t].form;
        }
        lines.push_back(std::move(line));
    }
    return lines;
}

std::vector<LabeledText> synthetic_classification(std::size_t count, std::uint64_t seed) {
    Rng rng(seed, RngStream::synthesis);
    std::vector<LabeledText> records;
    records.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        LabeledText r;
        r.variety = "standard";
        if (rng.below(2) == 0) {
            Sentence s = make_sentence(i, rng);
            std::string line;
            for (std::size_t t = 0; t < s.tokens.size(); ++t) {
                if (t) {
                    line += ' ';
                }
                line += s.tokens[t].form;
            }
            r.text = std::move(line);
            r.label = "wort";
        } else {
            std::uint32_t a = rng.below(90) + 10;
            std::uint32_t b = rng.below(90) + 10;
            bool plus = rng.below(2) == 0;
            std::uint32_t c = plus ? a + b : (a > b ? a - b : b - a);
            r.text = std::to_string(a) + (plus ? " + " : " - ") + std::to_string(b) + " = " +
                     std::to_string(c);
            r.label = "zahl";
        }
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace pixeltext
