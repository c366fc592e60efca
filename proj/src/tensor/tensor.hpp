#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "common/rng.hpp"

namespace pixeltext {

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

// Additive value used to mask logits before softmax. Finite so that checked
// mode can keep rejecting NaN/Inf everywhere; exp(x - max) underflows to an
// exact 0.0f long before this magnitude.
constexpr float kMaskedLogit = -1e30f;

// When enabled, every op rejects non-finite values in its output (and AdamW
// rejects non-finite gradients). On by default.
void set_checked_mode(bool enabled);
bool checked_mode();

// Dense row-major float32 tensor participating in a reverse-mode autodiff
// graph. Tensors are immutable after creation except for grad accumulation.
// No views: every op produces a fresh buffer.
class Tensor : public std::enable_shared_from_this<Tensor> {
public:
    std::vector<std::size_t> shape;
    std::vector<float> data;
    bool requires_grad = false;
    std::vector<float> grad;  // same length as data once touched; empty until then

    // Graph edges; leaves have no parents. backward_fn pushes this node's
    // grad into its parents' grads.
    std::vector<TensorPtr> parents;
    std::function<void(Tensor&)> backward_fn;

    static TensorPtr create(std::vector<std::size_t> shape, std::vector<float> values,
                            bool requires_grad = false);
    static TensorPtr zeros(std::vector<std::size_t> shape, bool requires_grad = false);
    static TensorPtr full(std::vector<std::size_t> shape, float value,
                          bool requires_grad = false);
    static TensorPtr scalar(float value, bool requires_grad = false);
    static TensorPtr randn(std::vector<std::size_t> shape, float stddev, Rng& rng,
                           bool requires_grad = false);

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t extent(std::size_t axis) const { return shape[axis]; }
    bool is_leaf() const { return parents.empty(); }
    bool is_scalar() const { return data.size() == 1; }

    float item() const;

    // (row, col) access for rank-2 tensors.
    float at(std::size_t row, std::size_t col) const { return data[row * shape[1] + col]; }

    void ensure_grad();
    void zero_grad();
    void add_to_grad(std::size_t index, float value) {
        ensure_grad();
        grad[index] += value;
    }
};

// ---- elementwise ----
TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
TensorPtr scale(const TensorPtr& a, float factor);
TensorPtr add_scalar(const TensorPtr& a, float value);
TensorPtr gelu(const TensorPtr& x);

// ---- linear algebra ----
TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
TensorPtr transpose(const TensorPtr& a);

// ---- normalization / loss ----
TensorPtr softmax(const TensorPtr& x, std::size_t axis);
TensorPtr layer_norm(const TensorPtr& x, const TensorPtr& gain, const TensorPtr& bias,
                     float epsilon);
TensorPtr cross_entropy(const TensorPtr& logits, const std::vector<int>& labels,
                        int ignore_index);
TensorPtr mse(const TensorPtr& pred, const TensorPtr& target);

// ---- reductions ----
TensorPtr sum(const TensorPtr& a);
TensorPtr mean(const TensorPtr& a);
TensorPtr sum_axis1(const TensorPtr& a);  // [m x n] -> [m]

// ---- structural (copies, rank 2 unless noted) ----
TensorPtr select_rows(const TensorPtr& x, const std::vector<std::size_t>& rows);
TensorPtr mean_rows(const TensorPtr& x, const std::vector<std::size_t>& rows);  // -> [d]
TensorPtr concat_rows(const TensorPtr& a, const TensorPtr& b);
TensorPtr concat_cols(const std::vector<TensorPtr>& parts);
TensorPtr slice_cols(const TensorPtr& x, std::size_t first, std::size_t last);  // [first,last)
TensorPtr append_ones_column(const TensorPtr& x);
TensorPtr reshape(const TensorPtr& x, std::vector<std::size_t> shape);
// Rows of x where row_mask != 0 are replaced by `row` ([d]); grads route
// accordingly.
TensorPtr substitute_rows(const TensorPtr& x, const std::vector<std::uint8_t>& row_mask,
                          const TensorPtr& row);
// Adds row ([d]) to every row of x ([n x d]); the usual bias term.
TensorPtr add_row_broadcast(const TensorPtr& x, const TensorPtr& row);
TensorPtr dropout(const TensorPtr& x, float rate, Rng& rng);

// Reverse-mode accumulation from a scalar root. Leaf grads accumulate across
// calls; interior grads are transient per call.
void backward(const TensorPtr& loss);

std::string shape_string(const std::vector<std::size_t>& shape);

}  // namespace pixeltext
