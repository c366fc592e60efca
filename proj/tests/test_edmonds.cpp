#include <limits>

#include <doctest.h>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "parse/edmonds.hpp"
#include "support/oracles.hpp"

using namespace pixeltext;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ArcMatrix blank(std::size_t n_words) {
    std::size_t m = n_words + 1;
    ArcMatrix scores(m, std::vector<double>(m, -kInf));
    return scores;
}

ArcMatrix random_scores(std::size_t n_words, Rng& rng) {
    ArcMatrix scores = blank(n_words);
    for (std::size_t h = 0; h <= n_words; ++h) {
        for (std::size_t d = 1; d <= n_words; ++d) {
            if (h != d) {
                scores[h][d] = static_cast<double>(rng.uniform()) * 20.0 - 10.0;
            }
        }
    }
    return scores;
}

}  // namespace

TEST_CASE("a single word attaches to the root") {
    ArcMatrix scores = blank(1);
    scores[0][1] = -3.0;
    auto heads = decode_tree(scores);
    CHECK(heads == std::vector<std::size_t>{0});
}

TEST_CASE("chain-favoring scores produce the chain tree") {
    std::size_t n = 5;
    ArcMatrix scores = blank(n);
    for (std::size_t h = 0; h <= n; ++h) {
        for (std::size_t d = 1; d <= n; ++d) {
            if (h != d) {
                scores[h][d] = (d == h + 1) ? 100.0 : -1.0;
            }
        }
    }
    auto heads = decode_tree(scores);
    CHECK(heads == std::vector<std::size_t>{0, 1, 2, 3, 4});
    auto brute = testsupport::brute_force_best_tree(scores);
    REQUIRE(brute.found);
    CHECK(tree_score(scores, heads) == doctest::Approx(brute.best_score));
}

TEST_CASE("decode matches exhaustive enumeration on random matrices") {
    Rng rng(2024, RngStream::init);
    for (int it = 0; it < 200; ++it) {
        std::size_t n = 2 + rng.below(4);  // 2..5 words
        ArcMatrix scores = random_scores(n, rng);
        auto heads = decode_tree(scores);
        CHECK(is_single_root_arborescence(heads));
        auto brute = testsupport::brute_force_best_tree(scores);
        REQUIRE(brute.found);
        CHECK(tree_score(scores, heads) == doctest::Approx(brute.best_score).epsilon(1e-9));
    }
}

TEST_CASE("multiple root attachments trigger the constrained re-decode") {
    // Unconstrained optimum attaches both words to the root.
    ArcMatrix scores = blank(2);
    scores[0][1] = 10.0;
    scores[0][2] = 10.0;
    scores[1][2] = -5.0;
    scores[2][1] = -5.0;
    auto heads = decode_tree(scores);
    CHECK(is_single_root_arborescence(heads));
    // Both constrained trees score 5; the tie goes to root child 1.
    CHECK(heads == std::vector<std::size_t>{0, 1});
}

TEST_CASE("degenerate inputs are rejected") {
    CHECK_THROWS_AS(decode_tree(ArcMatrix{}), DataError);
    CHECK_THROWS_AS(decode_tree(ArcMatrix{{0.0}}), DataError);
    ArcMatrix no_arcs = blank(2);  // every arc forbidden
    CHECK_THROWS_AS(decode_tree(no_arcs), DataError);
}

TEST_CASE("tie-breaking is lowest head index, bit-reproducibly") {
    ArcMatrix scores = blank(3);
    for (std::size_t h = 0; h <= 3; ++h) {
        for (std::size_t d = 1; d <= 3; ++d) {
            if (h != d) {
                scores[h][d] = 1.0;  // all equal
            }
        }
    }
    auto a = decode_tree(scores);
    auto b = decode_tree(scores);
    CHECK(a == b);
    CHECK(is_single_root_arborescence(a));
}

TEST_CASE("validity checker catches cycles and multi-root forests") {
    CHECK(is_single_root_arborescence({0, 1, 2}));
    CHECK_FALSE(is_single_root_arborescence({0, 0, 2}));  // two root children
    CHECK_FALSE(is_single_root_arborescence({2, 1}));     // 1->2->1 cycle
    CHECK_FALSE(is_single_root_arborescence({1}));        // self-arc
}
