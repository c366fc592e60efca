#include <cmath>

#include <doctest.h>

#include "common/error.hpp"
#include "model/encoder.hpp"
#include "render/renderer.hpp"

using namespace pixeltext;

namespace {

EncoderConfig tiny_config() {
    EncoderConfig cfg;
    cfg.hidden_dim = 8;
    cfg.num_layers = 1;
    cfg.num_heads = 2;
    cfg.mlp_ratio = 2;
    cfg.max_positions = 8;
    return cfg;
}

Encoder make_encoder(const EncoderConfig& cfg, std::uint64_t seed = 42) {
    Rng rng(seed, RngStream::init);
    return Encoder(cfg, rng);
}

}  // namespace

TEST_CASE("config validation") {
    EncoderConfig cfg = tiny_config();
    cfg.num_heads = 3;  // 8 % 3 != 0
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_config();
    cfg.dropout_rate = 1.0f;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("parameter count matches the closed form for several configs") {
    for (auto [h, l, heads, r] : {std::tuple<std::size_t, std::size_t, std::size_t,
                                             std::size_t>{8, 1, 2, 2},
                                  {16, 2, 4, 4},
                                  {12, 3, 2, 3}}) {
        EncoderConfig cfg;
        cfg.hidden_dim = h;
        cfg.num_layers = l;
        cfg.num_heads = heads;
        cfg.mlp_ratio = r;
        cfg.max_positions = 8;
        Encoder enc = make_encoder(cfg);
        CHECK(enc.params().total_values() == cfg.parameter_count());
    }
    // The published full-scale preset lands at the expected order of size.
    EncoderConfig full = EncoderConfig::full_scale();
    CHECK(full.parameter_count() > 85'000'000);
    CHECK(full.parameter_count() < 86'500'000);
}

TEST_CASE("position encodings: index 0 has zero sine components") {
    TensorPtr table = sinusoidal_positions(4, 6);
    for (std::size_t j = 0; j < 6; j += 2) {
        CHECK(table->at(0, j) == 0.0f);      // sin(0)
        CHECK(table->at(0, j + 1) == 1.0f);  // cos(0)
    }
    // Later positions differ from position 0.
    bool differs = false;
    for (std::size_t j = 0; j < 6; ++j) {
        differs = differs || table->at(2, j) != table->at(0, j);
    }
    CHECK(differs);
}

TEST_CASE("embedding of zero patches equals the position table rows") {
    EncoderConfig cfg = tiny_config();
    Encoder enc = make_encoder(cfg);
    auto zeros = Tensor::zeros({4, cfg.patch_dim});
    TensorPtr embedded = enc.embed(zeros);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < cfg.hidden_dim; ++j) {
            CHECK(embedded->at(i, j) == enc.position_table()->at(i, j));
        }
    }
}

TEST_CASE("projection is per-patch: swapping patches swaps projections") {
    EncoderConfig cfg = tiny_config();
    Encoder enc = make_encoder(cfg);
    Rng rng(3, RngStream::init);
    auto patches = Tensor::randn({3, cfg.patch_dim}, 1.0f, rng);
    auto swapped_data = patches->data;
    for (std::size_t j = 0; j < cfg.patch_dim; ++j) {
        std::swap(swapped_data[0 * cfg.patch_dim + j], swapped_data[2 * cfg.patch_dim + j]);
    }
    auto swapped = Tensor::create({3, cfg.patch_dim}, swapped_data);
    TensorPtr p1 = enc.project_patches(patches);
    TensorPtr p2 = enc.project_patches(swapped);
    for (std::size_t j = 0; j < cfg.hidden_dim; ++j) {
        CHECK(p1->at(0, j) == p2->at(2, j));
        CHECK(p1->at(2, j) == p2->at(0, j));
        CHECK(p1->at(1, j) == p2->at(1, j));
    }
}

TEST_CASE("encode output shape covers all patches") {
    EncoderConfig cfg = tiny_config();
    Encoder enc = make_encoder(cfg);
    Rendering r = render_text("abc", 8);
    TensorPtr out = enc.encode(r);
    CHECK(out->shape == std::vector<std::size_t>{8, cfg.hidden_dim});
}

TEST_CASE("embed rejects sequences beyond max_positions") {
    EncoderConfig cfg = tiny_config();
    Encoder enc = make_encoder(cfg);
    CHECK_THROWS_AS(enc.embed(Tensor::zeros({9, cfg.patch_dim})), DataError);
}

TEST_CASE("permutation equivariance without positions, broken with them") {
    EncoderConfig cfg = tiny_config();
    cfg.use_positions = false;
    Encoder enc = make_encoder(cfg);
    Rng rng(5, RngStream::init);
    auto patches = Tensor::randn({4, cfg.patch_dim}, 0.5f, rng);
    std::vector<std::uint8_t> mask(4, 1);

    std::vector<std::size_t> perm = {2, 0, 3, 1};
    std::vector<float> permuted(patches->data.size());
    for (std::size_t i = 0; i < 4; ++i) {
        std::copy(patches->data.begin() + static_cast<std::ptrdiff_t>(perm[i] * cfg.patch_dim),
                  patches->data.begin() +
                      static_cast<std::ptrdiff_t>((perm[i] + 1) * cfg.patch_dim),
                  permuted.begin() + static_cast<std::ptrdiff_t>(i * cfg.patch_dim));
    }
    auto permuted_t = Tensor::create({4, cfg.patch_dim}, permuted);

    TensorPtr out = enc.encode_embedded(enc.embed(patches), mask);
    TensorPtr out_p = enc.encode_embedded(enc.embed(permuted_t), mask);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < cfg.hidden_dim; ++j) {
            CHECK(out_p->at(i, j) == doctest::Approx(out->at(perm[i], j)).epsilon(1e-5));
        }
    }

    EncoderConfig with_pos = tiny_config();
    Encoder enc2 = make_encoder(with_pos);
    TensorPtr o1 = enc2.encode_embedded(enc2.embed(patches), mask);
    TensorPtr o2 = enc2.encode_embedded(enc2.embed(permuted_t), mask);
    bool any_differs = false;
    for (std::size_t i = 0; i < 4 && !any_differs; ++i) {
        for (std::size_t j = 0; j < with_pos.hidden_dim; ++j) {
            if (std::abs(o2->at(i, j) - o1->at(perm[i], j)) > 1e-4f) {
                any_differs = true;
                break;
            }
        }
    }
    CHECK(any_differs);
}

TEST_CASE("padding pixels cannot influence unmasked outputs") {
    EncoderConfig cfg = tiny_config();
    Encoder enc = make_encoder(cfg);
    Rendering r = render_text("abcd", 8);
    TensorPtr base = enc.encode(r);

    Rendering dirty = r;
    for (std::size_t p = r.separator_index + 1; p < r.max_patches; ++p) {
        for (std::size_t px = 0; px < kPatchPixels; ++px) {
            dirty.patches[p * kPatchPixels + px] = 0.77f;
        }
    }
    TensorPtr touched = enc.encode(dirty);
    for (std::size_t i = 0; i <= r.separator_index; ++i) {
        for (std::size_t j = 0; j < cfg.hidden_dim; ++j) {
            CHECK(base->at(i, j) == touched->at(i, j));
        }
    }
}

TEST_CASE("single visible position reduces attention to its value projection") {
    EncoderConfig cfg = tiny_config();
    Encoder enc = make_encoder(cfg);
    Rng rng(9, RngStream::init);
    auto x = Tensor::randn({1, cfg.hidden_dim}, 1.0f, rng);
    TensorPtr attn = enc.attention(x, {1}, 0);

    std::string p = layer_prefix(0);
    TensorPtr v = add_row_broadcast(matmul(x, enc.params().get(p + "attn.wv")),
                                    enc.params().get(p + "attn.bv"));
    TensorPtr expected = add_row_broadcast(matmul(v, enc.params().get(p + "attn.wo")),
                                           enc.params().get(p + "attn.bo"));
    for (std::size_t j = 0; j < cfg.hidden_dim; ++j) {
        CHECK(attn->at(0, j) == doctest::Approx(expected->at(0, j)).epsilon(1e-6));
    }
}

TEST_CASE("attention with hand-set identity projections matches hand math") {
    EncoderConfig cfg = tiny_config();
    cfg.hidden_dim = 2;
    cfg.num_heads = 1;
    cfg.mlp_ratio = 2;
    Encoder enc = make_encoder(cfg);
    // Overwrite layer-0 projections with the identity.
    auto set_identity = [&](const std::string& name) {
        auto t = enc.params().get(name);
        t->data = {1, 0, 0, 1};
    };
    set_identity("enc.layer0.attn.wq");
    set_identity("enc.layer0.attn.wk");
    set_identity("enc.layer0.attn.wv");
    set_identity("enc.layer0.attn.wo");
    for (const char* b : {"attn.bq", "attn.bk", "attn.bv", "attn.bo"}) {
        enc.params().get(std::string("enc.layer0.") + b)->data = {0, 0};
    }
    auto x = Tensor::create({2, 2}, {1, 0, 0, 1});
    TensorPtr out = enc.attention(x, {1, 1}, 0);

    // scores = x x^T / sqrt(2); softmax rows; probs @ x.
    double s = 1.0 / std::sqrt(2.0);
    double e_hi = std::exp(s), e_lo = std::exp(0.0);
    double p_hi = e_hi / (e_hi + e_lo);
    double p_lo = e_lo / (e_hi + e_lo);
    CHECK(out->at(0, 0) == doctest::Approx(p_hi).epsilon(1e-5));
    CHECK(out->at(0, 1) == doctest::Approx(p_lo).epsilon(1e-5));
    CHECK(out->at(1, 0) == doctest::Approx(p_lo).epsilon(1e-5));
    CHECK(out->at(1, 1) == doctest::Approx(p_hi).epsilon(1e-5));
}

TEST_CASE("fully masked attention is a loud error") {
    EncoderConfig cfg = tiny_config();
    Encoder enc = make_encoder(cfg);
    auto x = Tensor::zeros({3, cfg.hidden_dim});
    CHECK_THROWS_AS(enc.attention(x, {0, 0, 0}, 0), DataError);
}

TEST_CASE("dropout disabled by default keeps encode deterministic") {
    EncoderConfig cfg = tiny_config();
    Encoder enc = make_encoder(cfg);
    Rendering r = render_text("abcd", 8);
    TensorPtr a = enc.encode(r);
    TensorPtr b = enc.encode(r);
    CHECK(a->data == b->data);
}

TEST_CASE("dropout, when enabled, perturbs activations reproducibly per seed") {
    EncoderConfig cfg = tiny_config();
    cfg.dropout_rate = 0.5f;
    Encoder enc = make_encoder(cfg);
    Rendering r = render_text("abcd", 8);
    Rng d1(1, RngStream::dropout);
    Rng d2(1, RngStream::dropout);
    Rng d3(2, RngStream::dropout);
    TensorPtr a = enc.encode(r, &d1);
    TensorPtr b = enc.encode(r, &d2);
    TensorPtr c = enc.encode(r, &d3);
    CHECK(a->data == b->data);
    CHECK(a->data != c->data);
}
