#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "io/classify.hpp"
#include "io/conllu.hpp"

namespace pixeltext {

// Deterministic German-like fixtures for tests and smoke experiments. Same
// seed, same output, on every platform.

// Fully annotated sentences from a handful of dependency templates over a
// small lexicon (includes umlauts so perturbation has targets).
std::vector<Sentence> synthetic_treebank(std::size_t count, std::uint64_t seed);

// Plain text lines for pretraining.
std::vector<std::string> synthetic_text_lines(std::size_t count, std::uint64_t seed);

// Two visually distinct sentence families ("wort" prose vs "zahl" digit
// arithmetic) for sequence classification.
std::vector<LabeledText> synthetic_classification(std::size_t count, std::uint64_t seed);

// The dependency relations the treebank templates use (the fine-tune label
// inventory).
const std::vector<std::string>& synthetic_relations();

}  // namespace pixeltext
