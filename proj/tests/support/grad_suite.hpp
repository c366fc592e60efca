#pragma once

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "common/rng.hpp"
#include "io/synthetic.hpp"
#include "model/frontend.hpp"
#include "model/heads.hpp"
#include "model/mae.hpp"
#include "tensor/tensor.hpp"

namespace testsupport {

struct GradReport {
    std::size_t checks = 0;
    std::size_t failures = 0;
    std::string first_failure;

    void merge(const GradReport& other) {
        checks += other.checks;
        failures += other.failures;
        if (first_failure.empty()) {
            first_failure = other.first_failure;
        }
    }
};

// Central-difference comparison (step per the acceptance contract, relative
// error with a 0.1 denominator floor for near-zero gradients).
inline GradReport compare_gradients(const std::function<pixeltext::TensorPtr()>& forward,
                                    const std::vector<pixeltext::TensorPtr>& leaves,
                                    const std::string& label,
                                    std::size_t max_per_leaf = static_cast<std::size_t>(-1),
                                    std::uint64_t sample_seed = 7,
                                    double step = 1e-3, double tol = 1e-2) {
    GradReport report;
    for (const auto& leaf : leaves) {
        leaf->ensure_grad();
        leaf->zero_grad();
    }
    pixeltext::backward(forward());
    std::vector<std::vector<float>> analytic;
    for (const auto& leaf : leaves) {
        leaf->ensure_grad();
        analytic.push_back(leaf->grad);
    }
    pixeltext::Rng pick(sample_seed, pixeltext::RngStream::shuffling);
    for (std::size_t li = 0; li < leaves.size(); ++li) {
        pixeltext::Tensor& leaf = *leaves[li];
        std::vector<std::size_t> elements;
        if (leaf.size() <= max_per_leaf) {
            for (std::size_t j = 0; j < leaf.size(); ++j) {
                elements.push_back(j);
            }
        } else {
            for (std::size_t k = 0; k < max_per_leaf; ++k) {
                elements.push_back(pick.below(static_cast<std::uint32_t>(leaf.size())));
            }
        }
        for (std::size_t j : elements) {
            float original = leaf.data[j];
            leaf.data[j] = original + static_cast<float>(step);
            double f_plus = forward()->item();
            leaf.data[j] = original - static_cast<float>(step);
            double f_minus = forward()->item();
            leaf.data[j] = original;
            double fd = (f_plus - f_minus) / (2.0 * step);
            double g = analytic[li][j];
            double err = std::abs(g - fd) / std::max(std::abs(g) + std::abs(fd), 0.1);
            ++report.checks;
            if (!(err < tol)) {
                ++report.failures;
                if (report.first_failure.empty()) {
                    std::ostringstream os;
                    os << label << ": leaf " << li << " elem " << j << " analytic " << g
                       << " numeric " << fd << " err " << err;
                    report.first_failure = os.str();
                }
            }
        }
    }
    return report;
}

// Fixed random weights for scalarizing an op output: every output element
// contributes to the scalar, and the weights stay constant across the
// analytic and finite-difference evaluations.
inline pixeltext::TensorPtr fixed_weights(std::vector<std::size_t> shape,
                                          pixeltext::Rng& rng) {
    std::size_t total = 1;
    for (std::size_t e : shape) {
        total *= e;
    }
    std::vector<float> w(total);
    for (auto& v : w) {
        v = rng.uniform() * 2.0f - 1.0f;
    }
    return pixeltext::Tensor::create(std::move(shape), std::move(w));
}

// Finite-difference sweep over every differentiable op, `instances` random
// instances each.
inline GradReport run_op_gradient_suite(std::size_t instances, std::uint64_t seed) {
    using namespace pixeltext;
    GradReport report;
    Rng rng(seed, RngStream::init);
    auto rand_t = [&](std::vector<std::size_t> shape) {
        return Tensor::randn(std::move(shape), 1.0f, rng, true);
    };
    auto dims = [&](std::size_t lo, std::size_t hi) {
        return lo + rng.below(static_cast<std::uint32_t>(hi - lo + 1));
    };

    for (std::size_t it = 0; it < instances; ++it) {
        std::size_t m = dims(1, 4), k = dims(1, 4), n = dims(1, 4);

        {
            auto a = rand_t({m, n});
            auto b = rand_t({m, n});
            auto w = fixed_weights({m, n}, rng);
            report.merge(compare_gradients([&] { return sum(mul(add(a, b), w)); }, {a, b},
                                           "add"));
            report.merge(compare_gradients([&] { return sum(mul(sub(a, b), w)); }, {a, b},
                                           "sub"));
            report.merge(compare_gradients([&] { return sum(mul(mul(a, b), w)); }, {a, b},
                                           "mul"));
            report.merge(compare_gradients([&] { return sum(mul(scale(a, 1.7f), w)); }, {a},
                                           "scale"));
            report.merge(compare_gradients(
                [&] { return sum(mul(add_scalar(a, -0.3f), w)); }, {a}, "add_scalar"));
            report.merge(
                compare_gradients([&] { return sum(mul(gelu(a), w)); }, {a}, "gelu"));
            report.merge(compare_gradients(
                [&] { return sum(mul(softmax(a, it % 2), w)); }, {a}, "softmax"));
            report.merge(compare_gradients([&] { return mse(a, b); }, {a, b}, "mse"));
            report.merge(compare_gradients([&] { return sum(a); }, {a}, "sum"));
            report.merge(compare_gradients([&] { return mean(a); }, {a}, "mean"));

            auto wt = fixed_weights({n, m}, rng);
            report.merge(compare_gradients([&] { return sum(mul(transpose(a), wt)); }, {a},
                                           "transpose"));
            report.merge(compare_gradients([&] { return sum(mul(reshape(a, {n, m}), wt)); },
                                           {a}, "reshape"));
            auto wrow = fixed_weights({m}, rng);
            report.merge(compare_gradients([&] { return sum(mul(sum_axis1(a), wrow)); }, {a},
                                           "sum_axis1"));
            auto wplus = fixed_weights({m, n + 1}, rng);
            report.merge(compare_gradients(
                [&] { return sum(mul(append_ones_column(a), wplus)); }, {a},
                "append_ones_column"));
        }
        {
            auto a = rand_t({m, k});
            auto b = rand_t({k, n});
            auto w = fixed_weights({m, n}, rng);
            report.merge(compare_gradients([&] { return sum(mul(matmul(a, b), w)); }, {a, b},
                                           "matmul"));
        }
        {
            auto x = rand_t({m, n});
            auto gain = rand_t({n});
            auto bias = rand_t({n});
            auto w = fixed_weights({m, n}, rng);
            report.merge(compare_gradients(
                [&] { return sum(mul(layer_norm(x, gain, bias, 1e-5f), w)); },
                {x, gain, bias}, "layer_norm"));
            auto row = rand_t({n});
            report.merge(compare_gradients(
                [&] { return sum(mul(add_row_broadcast(x, row), w)); }, {x, row},
                "add_row_broadcast"));
        }
        {
            std::size_t rows = dims(2, 5), cols = dims(2, 5);
            auto logits = rand_t({rows, cols});
            std::vector<int> labels(rows);
            for (auto& l : labels) {
                l = static_cast<int>(rng.below(static_cast<std::uint32_t>(cols)));
            }
            labels[rng.below(static_cast<std::uint32_t>(rows))] = -1;  // one ignored
            bool any = false;
            for (int l : labels) {
                any = any || l >= 0;
            }
            if (!any) {
                labels[0] = 0;
            }
            report.merge(compare_gradients(
                [&] { return cross_entropy(logits, labels, -1); }, {logits},
                "cross_entropy"));
        }
        {
            std::size_t rows = dims(2, 5);
            auto x = rand_t({rows, n});
            std::vector<std::size_t> sel;
            for (std::size_t i = 0; i < rows + 1; ++i) {
                sel.push_back(rng.below(static_cast<std::uint32_t>(rows)));
            }
            auto wsel = fixed_weights({sel.size(), n}, rng);
            report.merge(compare_gradients(
                [&] { return sum(mul(select_rows(x, sel), wsel)); }, {x}, "select_rows"));
            auto wone = fixed_weights({1, n}, rng);
            report.merge(compare_gradients(
                [&] { return sum(mul(reshape(mean_rows(x, sel), {1, n}), wone)); }, {x},
                "mean_rows"));
            auto y = rand_t({dims(1, 3), n});
            auto wcat = fixed_weights({rows + y->shape[0], n}, rng);
            report.merge(compare_gradients(
                [&] { return sum(mul(concat_rows(x, y), wcat)); }, {x, y}, "concat_rows"));
            auto z = rand_t({rows, dims(1, 3)});
            auto wcols = fixed_weights({rows, n + z->shape[1]}, rng);
            report.merge(compare_gradients(
                [&] { return sum(mul(concat_cols({x, z}), wcols)); }, {x, z},
                "concat_cols"));
            if (n >= 2) {
                auto wslice = fixed_weights({rows, n - 1}, rng);
                report.merge(compare_gradients(
                    [&] { return sum(mul(slice_cols(x, 1, n), wslice)); }, {x},
                    "slice_cols"));
            }
            std::vector<std::uint8_t> row_mask(rows, 0);
            row_mask[rng.below(static_cast<std::uint32_t>(rows))] = 1;
            auto rep = rand_t({n});
            auto wsub = fixed_weights({rows, n}, rng);
            report.merge(compare_gradients(
                [&] { return sum(mul(substitute_rows(x, row_mask, rep), wsub)); },
                {x, rep}, "substitute_rows"));
        }
    }
    return report;
}

// The full composition: encoder + one head, gradients w.r.t. every parameter
// group (subsampled elements per tensor).
inline GradReport run_composition_gradient_suite(std::size_t instances, std::uint64_t seed,
                                                 std::size_t elements_per_tensor = 6) {
    using namespace pixeltext;
    GradReport report;
    for (std::size_t it = 0; it < instances; ++it) {
        EncoderConfig cfg;
        cfg.hidden_dim = 8;
        cfg.num_layers = 1;
        cfg.num_heads = 2;
        cfg.mlp_ratio = 2;
        cfg.max_positions = 8;
        Rng init(seed + it, RngStream::init);
        Encoder encoder(cfg, init);
        MaeDecoder decoder(cfg, init);
        PixelFrontEnd front(encoder, 8);

        auto sentences = synthetic_treebank(1, seed + it);
        std::vector<std::string> words = {sentences[0].tokens[0].form,
                                          sentences[0].tokens[1].form};

        // POS head through the encoder.
        {
            PosHead head(cfg.hidden_dim, init);
            ParamStore all;
            all.merge(encoder.params());
            all.merge(head.params());
            std::vector<TensorPtr> leaves;
            for (const auto& [name, t] : all.entries()) {
                leaves.push_back(t);
            }
            auto forward = [&]() -> TensorPtr {
                EncodedWords ew = front.encode_words(words);
                TensorPtr reps = word_representations(ew.encoder_output, ew.spans, false);
                return head.loss(reps, {1, 2});
            };
            report.merge(compare_gradients(forward, leaves, "encoder+pos",
                                           elements_per_tensor, seed + it));
        }
        // Biaffine head through the encoder.
        {
            BiaffineHead head(cfg.hidden_dim, {"det", "root"}, init, 6, 4);
            ParamStore all;
            all.merge(encoder.params());
            all.merge(head.params());
            std::vector<TensorPtr> leaves;
            for (const auto& [name, t] : all.entries()) {
                leaves.push_back(t);
            }
            auto forward = [&]() -> TensorPtr {
                EncodedWords ew = front.encode_words(words);
                TensorPtr reps = word_representations(ew.encoder_output, ew.spans, false);
                return head.loss(head.score(reps), {2, 0}, {0, 1});
            };
            report.merge(compare_gradients(forward, leaves, "encoder+biaffine",
                                           elements_per_tensor, seed + it + 1));
        }
        // MAE reconstruction through the encoder.
        {
            ParamStore all;
            all.merge(encoder.params());
            all.merge(decoder.params());
            std::vector<TensorPtr> leaves;
            for (const auto& [name, t] : all.entries()) {
                leaves.push_back(t);
            }
            Rendering r = render_text("ab cd", 8);
            std::vector<std::uint8_t> mask(r.num_text_patches, 0);
            mask[0] = 1;
            auto forward = [&]() -> TensorPtr {
                return mae_forward(encoder, decoder, r, mask).loss;
            };
            report.merge(compare_gradients(forward, leaves, "encoder+mae",
                                           elements_per_tensor, seed + it + 2));
        }
        // Sequence head over pooled encoder output.
        {
            SequenceHead head(cfg.hidden_dim, 3, init);
            ParamStore all;
            all.merge(encoder.params());
            all.merge(head.params());
            std::vector<TensorPtr> leaves;
            for (const auto& [name, t] : all.entries()) {
                leaves.push_back(t);
            }
            auto forward = [&]() -> TensorPtr {
                EncodedSequence es = front.encode_sequence("ab cd");
                return head.loss(es.encoder_output, es.pooled_rows, 1);
            };
            report.merge(compare_gradients(forward, leaves, "encoder+sequence",
                                           elements_per_tensor, seed + it + 3));
        }
    }
    return report;
}

}  // namespace testsupport
