#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <doctest.h>

#include "common/rng.hpp"
#include "tensor/tensor.hpp"

namespace testsupport {

// Central-difference gradient check. `forward` must rebuild the graph from
// the leaf tensors on every call and return a scalar. Relative error uses a
// 0.1 floor in the denominator so near-zero gradients do not amplify float32
// noise. When max_per_leaf < leaf size, a deterministic random subset of
// elements is probed.
inline void check_gradients(const std::function<pixeltext::TensorPtr()>& forward,
                            const std::vector<pixeltext::TensorPtr>& leaves,
                            double step = 1e-3, double tol = 1e-2,
                            std::size_t max_per_leaf = static_cast<std::size_t>(-1),
                            std::uint64_t sample_seed = 99) {
    for (const auto& leaf : leaves) {
        leaf->ensure_grad();
        leaf->zero_grad();
    }
    pixeltext::TensorPtr loss = forward();
    pixeltext::backward(loss);
    std::vector<std::vector<float>> analytic;
    analytic.reserve(leaves.size());
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
            INFO("leaf ", li, " element ", j, " analytic ", g, " numeric ", fd);
            CHECK(err < tol);
        }
    }
}

}  // namespace testsupport
