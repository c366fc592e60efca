#include <doctest.h>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "io/synthetic.hpp"
#include "metrics/metrics.hpp"

using namespace pixeltext;

namespace {

Sentence sentence_from(const std::vector<std::tuple<std::string, std::string, int,
                                                    std::string>>& rows) {
    Sentence s;
    int id = 1;
    for (const auto& [form, upos, head, deprel] : rows) {
        Token t;
        t.id = id++;
        t.form = form;
        t.upos = upos;
        t.head = head;
        t.deprel = deprel;
        s.tokens.push_back(t);
    }
    return s;
}

// Random but deterministic prediction corruption.
std::vector<Sentence> corrupt(const std::vector<Sentence>& gold, double flip_rate,
                              std::uint64_t seed) {
    Rng rng(seed, RngStream::synthesis);
    std::vector<Sentence> pred = gold;
    for (auto& s : pred) {
        for (auto& t : s.tokens) {
            if (rng.uniform_double() < flip_rate) {
                t.upos = t.upos == "NOUN" ? "VERB" : "NOUN";
            }
            if (rng.uniform_double() < flip_rate) {
                t.head = t.head == 0 ? static_cast<int>(s.tokens.size()) : 0;
                if (t.head == t.id) {
                    t.head = t.id - 1;
                }
                t.deprel = "dep";
            }
        }
    }
    return pred;
}

}  // namespace

TEST_CASE("tagging accuracy basics") {
    auto gold = synthetic_treebank(4, 1);
    CHECK(tagging_accuracy(gold, gold) == doctest::Approx(100.0));

    auto s = sentence_from({{"a", "DET", 2, "det"},
                            {"b", "NOUN", 0, "root"},
                            {"c", "VERB", 2, "dep"},
                            {"d", "PUNCT", 2, "punct"}});
    auto pred = s;
    pred.tokens[1].upos = "VERB";
    CHECK(tagging_accuracy({s}, {pred}) == doctest::Approx(75.0));

    CHECK_THROWS_AS(tagging_accuracy({}, {}), DataError);
    auto longer = s;
    longer.tokens.push_back(s.tokens[0]);
    CHECK_THROWS_AS(tagging_accuracy({s}, {longer}), DataError);
}

TEST_CASE("uas/las frozen hand fixture: 60.0 and 40.0") {
    // Five tokens over two sentences; 3 heads correct, 2 of those also carry
    // the right relation.
    auto gold1 = sentence_from(
        {{"a", "DET", 2, "det"}, {"b", "NOUN", 0, "root"}, {"c", "VERB", 2, "dep"}});
    auto gold2 = sentence_from({{"d", "NOUN", 0, "root"}, {"e", "PUNCT", 1, "punct"}});

    auto pred1 = gold1;
    pred1.tokens[2].head = 1;           // wrong head
    pred1.tokens[0].deprel = "amod";    // right head, wrong label
    auto pred2 = gold2;
    pred2.tokens[1].head = 0;           // wrong head
    // Correct heads: a, b, d (3 of 5). Fully correct: b, d (2 of 5).

    auto [uas, las] = uas_las({gold1, gold2}, {pred1, pred2});
    CHECK(uas == doctest::Approx(60.0));
    CHECK(las == doctest::Approx(40.0));

    auto [u2, l2] = uas_las({gold1}, {gold1});
    CHECK(u2 == doctest::Approx(100.0));
    CHECK(l2 == doctest::Approx(100.0));

    auto labels_wrong = gold1;
    for (auto& t : labels_wrong.tokens) {
        t.deprel = "nonsense";
    }
    auto [u3, l3] = uas_las({gold1}, {labels_wrong});
    CHECK(u3 == doctest::Approx(100.0));
    CHECK(l3 == doctest::Approx(0.0));
}

TEST_CASE("per-tag accuracy with absent and partial tags") {
    auto gold = sentence_from({{"a", "NOUN", 0, "root"},
                               {"b", "NOUN", 1, "dep"},
                               {"c", "NOUN", 1, "dep"},
                               {"d", "VERB", 1, "dep"}});
    auto pred = gold;
    pred.tokens[2].upos = "VERB";  // 2/3 NOUN correct

    auto stats = per_tag_accuracy({gold}, {pred});
    CHECK(stats.size() == 17);
    CHECK(stats["NOUN"].total == 3);
    CHECK(stats["NOUN"].correct == 2);
    CHECK(format_percent(*stats["NOUN"].percent()) == "66.7");
    CHECK(stats["INTJ"].total == 0);
    CHECK_FALSE(stats["INTJ"].percent().has_value());
    CHECK(stats["VERB"].percent().has_value());

    // Breakdown totals reconcile with the overall count.
    std::size_t total = 0, correct = 0;
    for (const auto& [tag, cp] : stats) {
        total += cp.total;
        correct += cp.correct;
    }
    CHECK(total == 4);
    CHECK(100.0 * correct / total == doctest::Approx(tagging_accuracy({gold}, {pred})));
}

TEST_CASE("las by distance: chain case and weighted-mean consistency") {
    auto chain = sentence_from(
        {{"a", "NOUN", 2, "dep"}, {"b", "NOUN", 3, "dep"}, {"c", "NOUN", 0, "root"}});
    // Distances: |2-1| = 1, |3-2| = 1, root attachment distance = id 3.
    auto buckets = las_by_distance({chain}, {chain}, 6);
    REQUIRE(buckets.size() == 2);
    CHECK(buckets[0].first == "1");
    CHECK(buckets[0].second.total == 2);
    CHECK(*buckets[0].second.percent() == doctest::Approx(100.0));
    CHECK(buckets[1].first == "3");
    CHECK(buckets[1].second.total == 1);

    auto gold = synthetic_treebank(30, 21);
    auto pred = corrupt(gold, 0.3, 5);
    auto by_dist = las_by_distance(gold, pred, 6);
    double weighted = 0.0;
    std::size_t total = 0;
    for (const auto& [name, cp] : by_dist) {
        weighted += static_cast<double>(cp.correct);
        total += cp.total;
    }
    auto [uas, las] = uas_las(gold, pred);
    (void)uas;
    CHECK(std::abs(100.0 * weighted / total - las) < 1e-9);
}

TEST_CASE("distance buckets pool beyond the last distinct value") {
    std::vector<std::tuple<std::string, std::string, int, std::string>> rows;
    for (int i = 1; i <= 9; ++i) {
        rows.push_back({"w", "NOUN", i == 9 ? 0 : 9, i == 9 ? "root" : "dep"});
    }
    auto s = sentence_from(rows);
    auto buckets = las_by_distance({s}, {s}, 6);
    bool has_overflow = false;
    for (const auto& [name, cp] : buckets) {
        if (name == "7+") {
            has_overflow = true;
            CHECK(cp.total >= 2);  // distance 8 dep and the root at distance 9
        }
    }
    CHECK(has_overflow);
}

TEST_CASE("las never exceeds uas") {
    auto gold = synthetic_treebank(25, 3);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto pred = corrupt(gold, 0.4, seed);
        auto [uas, las] = uas_las(gold, pred);
        CHECK(las <= uas);
    }
}

TEST_CASE("metrics are invariant to sentence order") {
    auto gold = synthetic_treebank(12, 9);
    auto pred = corrupt(gold, 0.3, 2);
    auto [u1, l1] = uas_las(gold, pred);
    double acc1 = tagging_accuracy(gold, pred);

    std::vector<Sentence> gold_r(gold.rbegin(), gold.rend());
    std::vector<Sentence> pred_r(pred.rbegin(), pred.rend());
    auto [u2, l2] = uas_las(gold_r, pred_r);
    CHECK(u1 == doctest::Approx(u2));
    CHECK(l1 == doctest::Approx(l2));
    CHECK(acc1 == doctest::Approx(tagging_accuracy(gold_r, pred_r)));
}

TEST_CASE("classification accuracy and multi-run aggregation") {
    CHECK(classification_accuracy({"a", "b"}, {"a", "b"}) == doctest::Approx(100.0));
    CHECK(classification_accuracy({"a", "b", "c", "d"}, {"a", "x", "c", "y"}) ==
          doctest::Approx(50.0));
    CHECK_THROWS_AS(classification_accuracy({}, {}), DataError);
    CHECK_THROWS_AS(classification_accuracy({"a"}, {}), DataError);

    auto [mean, stdev] = mean_std({50.0, 60.0, 70.0});
    CHECK(mean == doctest::Approx(60.0));
    CHECK(stdev == doctest::Approx(10.0));

    auto [m1, s1] = mean_std({42.5});
    CHECK(m1 == doctest::Approx(42.5));
    CHECK(s1 == 0.0);
    CHECK_THROWS_AS(mean_std({}), DataError);
}

TEST_CASE("one-decimal rendering matches the reporting convention") {
    CHECK(format_percent(95.25) == "95.2");
    CHECK(format_percent(100.0) == "100.0");
    CHECK(format_percent(66.666) == "66.7");
}

TEST_CASE("table rendering aligns columns") {
    std::string table = render_table({{"model", "acc"}, {"pixel", "95.2"}, {"bpe", "9.0"}});
    CHECK(table.find("model  acc") == 0);
    CHECK(table.find("pixel") != std::string::npos);
}
