#pragma once

#include <cstddef>
#include <vector>

namespace pixeltext {

// Arc score matrix for a sentence of n words: (n+1) x (n+1) with node 0 the
// synthetic root; scores[h][d] is the score of attaching dependent d to head
// h. Forbidden arcs (self-arcs, arcs into the root) are -infinity.
using ArcMatrix = std::vector<std::vector<double>>;

// Maximum-score arborescence rooted at node 0, with exactly one word attached
// to the root (when the unconstrained optimum has several root children, the
// decode is re-run once per candidate root child and the best kept; exact
// ties go to the lowest word index). Returns head indices for words 1..n
// (element i is the head of word i+1). Ties inside the search also resolve to
// the lowest head index.
std::vector<std::size_t> decode_tree(const ArcMatrix& scores);

// Sum of scores[head][dep] over all words.
double tree_score(const ArcMatrix& scores, const std::vector<std::size_t>& heads);

// Every word has one head, every word reaches the root, and exactly one word
// attaches to the root directly.
bool is_single_root_arborescence(const std::vector<std::size_t>& heads);

}  // namespace pixeltext
