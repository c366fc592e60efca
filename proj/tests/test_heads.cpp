#include <cmath>

#include <doctest.h>

#include "common/error.hpp"
#include "model/frontend.hpp"
#include "model/heads.hpp"

using namespace pixeltext;

namespace {

EncoderConfig tiny_config() {
    EncoderConfig cfg;
    cfg.hidden_dim = 8;
    cfg.num_layers = 1;
    cfg.num_heads = 2;
    cfg.mlp_ratio = 2;
    cfg.max_positions = 16;
    return cfg;
}

}  // namespace

TEST_CASE("upos inventory is the fixed 17-tag set") {
    CHECK(kUposTags.size() == 17);
    CHECK(upos_index("ADJ") == 0);
    CHECK(upos_index("X") == 16);
    CHECK(upos_index("NOUN") == 7);
    CHECK(upos_index("nope") == -1);
}

TEST_CASE("word_representations picks first-patch rows") {
    Rng rng(1, RngStream::init);
    auto encoded = Tensor::randn({12, 4}, 1.0f, rng);

    auto single = word_representations(encoded, {{3, 3}});
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(single->at(0, j) == encoded->at(3, j));
    }

    auto reps = word_representations(encoded, {{0, 3}, {4, 9}});
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(reps->at(0, j) == encoded->at(0, j));
        CHECK(reps->at(1, j) == encoded->at(4, j));
    }

    // Changing later spans does not move earlier rows.
    auto reps2 = word_representations(encoded, {{0, 3}, {5, 9}});
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(reps2->at(0, j) == reps->at(0, j));
    }

    CHECK_THROWS_AS(word_representations(encoded, {}), DataError);
}

TEST_CASE("word_representations mean pooling averages the span") {
    auto encoded = Tensor::create({3, 2}, {1, 2, 3, 4, 5, 6});
    auto mean_rep = word_representations(encoded, {{0, 2}}, true);
    CHECK(mean_rep->at(0, 0) == doctest::Approx(3.0f));
    CHECK(mean_rep->at(0, 1) == doctest::Approx(4.0f));
}

TEST_CASE("pos head: uniform logits at zero weights give ln(17) loss") {
    Rng rng(3, RngStream::init);
    PosHead head(8, rng);
    head.params().get("pos.weight")->data.assign(8 * 17, 0.0f);
    auto words = Tensor::randn({5, 8}, 1.0f, rng);
    auto loss = head.loss(words, {0, 5, 16, 7, 3});
    CHECK(loss->item() == doctest::Approx(std::log(17.0)).epsilon(1e-5));
}

TEST_CASE("argmax is invariant under uniform logit shifts and breaks ties low") {
    auto logits = Tensor::create({1, 4}, {0.5f, 2.0f, 2.0f, -1.0f});
    CHECK(argmax_row(logits, 0) == 1);  // tie between 1 and 2 -> lowest
    auto shifted = add_scalar(logits, 100.0f);
    CHECK(argmax_row(shifted, 0) == 1);
}

TEST_CASE("biaffine scores match a hand-evaluated bilinear form") {
    Rng rng(7, RngStream::init);
    BiaffineHead head(8, {"a", "b"}, rng, 4, 3);
    auto words = Tensor::randn({2, 8}, 1.0f, rng);
    auto scores = head.score(words);
    CHECK(scores.arc_scores->shape == std::vector<std::size_t>{3, 3});

    // Recompute s(h, d) = [head(h); 1]^T U dep(d) in double from the actual
    // MLP outputs.
    auto reps = concat_rows(head.params().get("parse.root"), words);
    auto arc_head = gelu(add_row_broadcast(
        matmul(reps, head.params().get("parse.arc_head.weight")),
        head.params().get("parse.arc_head.bias")));
    auto arc_dep = gelu(add_row_broadcast(
        matmul(reps, head.params().get("parse.arc_dep.weight")),
        head.params().get("parse.arc_dep.bias")));
    auto U = head.params().get("parse.arc_u");
    for (std::size_t h = 0; h < 3; ++h) {
        for (std::size_t d = 1; d < 3; ++d) {
            if (h == d) {
                continue;
            }
            double expected = 0.0;
            for (std::size_t i = 0; i <= 4; ++i) {
                double hv = i < 4 ? arc_head->at(h, i) : 1.0;
                for (std::size_t j = 0; j < 4; ++j) {
                    expected += hv * U->at(i, j) * arc_dep->at(d, j);
                }
            }
            CHECK(scores.arc_scores->at(h, d) == doctest::Approx(expected).epsilon(1e-4));
        }
    }
}

TEST_CASE("self-arcs carry the masked logit before decoding") {
    Rng rng(7, RngStream::init);
    BiaffineHead head(8, {"a"}, rng, 4, 3);
    auto words = Tensor::randn({3, 8}, 1.0f, rng);
    auto scores = head.score(words);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(scores.arc_scores->at(i, i) <= kMaskedLogit / 2);
    }
    // The decode-side matrix uses true -inf for forbidden arcs.
    auto matrix = BiaffineHead::arc_matrix(scores);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(std::isinf(matrix[i][i]));
    }
    CHECK(std::isinf(matrix[1][0]));  // nothing points into the root
}

TEST_CASE("uniform scores still decode to a valid tree via tie-breaking") {
    Rng rng(7, RngStream::init);
    BiaffineHead head(8, {"a"}, rng, 4, 3);
    head.params().get("parse.arc_u")->data.assign(5 * 4, 0.0f);
    auto words = Tensor::randn({4, 8}, 1.0f, rng);
    auto scores = head.score(words);
    auto heads = head.decode(scores);
    CHECK(is_single_root_arborescence(heads));
    CHECK(heads == head.decode(scores));  // deterministic
}

TEST_CASE("label assignment along gold arcs follows the bilinear corner fixture") {
    Rng rng(7, RngStream::init);
    BiaffineHead head(8, {"first", "second", "third"}, rng, 4, 3);
    // Zero label MLPs: the augmented label vectors collapse to [0,0,0,1], so
    // the score of relation r is U_r[3][3].
    head.params().get("parse.label_head.weight")->data.assign(8 * 3, 0.0f);
    head.params().get("parse.label_head.bias")->data.assign(3, 0.0f);
    head.params().get("parse.label_dep.weight")->data.assign(8 * 3, 0.0f);
    head.params().get("parse.label_dep.bias")->data.assign(3, 0.0f);
    auto label_u = head.params().get("parse.label_u");  // [4 x 3*4]
    label_u->data.assign(label_u->size(), 0.0f);
    // Corner entries: relation 0 -> 0.1, relation 1 -> 0.9, relation 2 -> 0.5.
    label_u->data[3 * 12 + 3] = 0.1f;
    label_u->data[3 * 12 + 7] = 0.9f;
    label_u->data[3 * 12 + 11] = 0.5f;

    auto words = Tensor::randn({2, 8}, 1.0f, rng);
    auto scores = head.score(words);
    std::vector<std::size_t> gold_heads = {0, 1};
    auto predicted = head.predict_relations(scores, gold_heads);
    CHECK(predicted == std::vector<int>{1, 1});

    auto logits = head.label_logits(scores, gold_heads);
    CHECK(logits->at(0, 0) == doctest::Approx(0.1f));
    CHECK(logits->at(0, 1) == doctest::Approx(0.9f));
    CHECK(logits->at(0, 2) == doctest::Approx(0.5f));
}

TEST_CASE("sequence head pools identical rows to the row itself") {
    Rng rng(5, RngStream::init);
    SequenceHead head(4, 3, rng);
    std::vector<float> row = {0.5f, -1.0f, 2.0f, 0.25f};
    std::vector<float> data;
    for (int i = 0; i < 5; ++i) {
        data.insert(data.end(), row.begin(), row.end());
    }
    auto encoded = Tensor::create({5, 4}, data);
    auto pooled_all = head.forward(encoded, {0, 1, 2, 3, 4});
    auto pooled_one = head.forward(encoded, {2});
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(pooled_all->at(0, j) == doctest::Approx(pooled_one->at(0, j)));
    }
}

TEST_CASE("padding extension leaves sequence logits unchanged") {
    EncoderConfig cfg = tiny_config();
    Rng rng(11, RngStream::init);
    Encoder encoder(cfg, rng);
    SequenceHead head(cfg.hidden_dim, 2, rng);

    PixelFrontEnd narrow(encoder, 8);
    PixelFrontEnd wide(encoder, 16);
    EncodedSequence a = narrow.encode_sequence("ab");
    EncodedSequence b = wide.encode_sequence("ab");
    auto la = head.forward(a.encoder_output, a.pooled_rows);
    auto lb = head.forward(b.encoder_output, b.pooled_rows);
    for (std::size_t j = 0; j < 2; ++j) {
        CHECK(la->at(0, j) == lb->at(0, j));
    }
}

TEST_CASE("front-ends share a single encoder code path") {
    EncoderConfig cfg = tiny_config();
    Rng rng(13, RngStream::init);
    Encoder encoder(cfg, rng);

    // Pixel route: encode() must equal the shared encode_embedded() on the
    // same embeddings.
    Rendering r = render_text("ab cd", 16);
    TensorPtr direct = encoder.encode(r);
    TensorPtr via_shared = encoder.encode_embedded(
        encoder.embed(encoder.patches_tensor(r)), r.attention_mask);
    CHECK(direct->data == via_shared->data);

    // Subword route feeds the same encode_embedded().
    BpeVocab vocab = train_bpe({"ab cd", "cd ab"}, 32);
    MlmModel mlm(cfg, vocab.size(), rng);
    std::vector<int> input(8, vocab.pad_id);
    std::vector<std::uint8_t> attn(8, 0);
    auto ids = encode_bpe("ab cd", vocab);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        input[i] = ids[i];
        attn[i] = 1;
    }
    TensorPtr tok = encoder.encode_embedded(mlm.token_embed(encoder, input), attn);
    CHECK(tok->shape == std::vector<std::size_t>{8, cfg.hidden_dim});
}

TEST_CASE("subword front-end span bookkeeping mirrors the pixel contract") {
    EncoderConfig cfg = tiny_config();
    Rng rng(13, RngStream::init);
    Encoder encoder(cfg, rng);
    BpeVocab vocab = train_bpe({"Hund sieht Katze", "Katze sieht Hund"}, 48);
    MlmModel mlm(cfg, vocab.size(), rng);
    SubwordFrontEnd front(encoder, mlm, vocab, 16);

    EncodedWords ew = front.encode_words({"Hund", "sieht"});
    REQUIRE(ew.spans.size() == 2);
    CHECK(ew.spans[0].first == 0);
    CHECK(ew.spans[1].first == ew.spans[0].second + 1);
    CHECK_FALSE(ew.truncated);

    EncodedSequence es = front.encode_sequence("Hund sieht Katze");
    CHECK_FALSE(es.pooled_rows.empty());
}
