#include "tensor/tensor.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <unordered_set>

#include "common/error.hpp"

namespace pixeltext {

namespace {

std::atomic<bool> g_checked{true};

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) {
        n *= e;
    }
    return n;
}

void check_finite(const Tensor& t, const char* op) {
    if (!g_checked.load(std::memory_order_relaxed)) {
        return;
    }
    for (float v : t.data) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string("non-finite value produced by op '") + op + "'");
        }
    }
}

void require(bool condition, const std::string& message) {
    if (!condition) {
        throw InternalError(message);
    }
}

void require_rank2(const TensorPtr& t, const char* op) {
    require(t->rank() == 2, std::string(op) + ": expected rank-2 tensor, got shape " +
                                shape_string(t->shape));
}

bool any_tracked(std::initializer_list<const TensorPtr*> ts) {
    for (const TensorPtr* t : ts) {
        if ((*t)->requires_grad) {
            return true;
        }
    }
    return false;
}

TensorPtr make_node(std::vector<std::size_t> shape, std::vector<float> values,
                    std::vector<TensorPtr> parents, const char* op) {
    auto t = std::make_shared<Tensor>();
    t->shape = std::move(shape);
    t->data = std::move(values);
    bool tracked = false;
    for (const auto& p : parents) {
        tracked = tracked || p->requires_grad;
    }
    t->requires_grad = tracked;
    if (tracked) {
        t->parents = std::move(parents);
    }
    check_finite(*t, op);
    return t;
}

// c[m x n] = a[m x k] @ b[k x n], accumulated in double per output row.
std::vector<float> mm_nn(const float* a, const float* b, std::size_t m, std::size_t k,
                         std::size_t n) {
    std::vector<float> c(m * n);
    std::vector<double> acc(n);
    for (std::size_t i = 0; i < m; ++i) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t kk = 0; kk < k; ++kk) {
            double av = a[i * k + kk];
            const float* brow = b + kk * n;
            for (std::size_t j = 0; j < n; ++j) {
                acc[j] += av * brow[j];
            }
        }
        float* crow = c.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            crow[j] = static_cast<float>(acc[j]);
        }
    }
    return c;
}

// c[m x k] = a[m x n] @ b[k x n]^T
std::vector<float> mm_nt(const float* a, const float* b, std::size_t m, std::size_t n,
                         std::size_t k) {
    std::vector<float> c(m * k);
    for (std::size_t i = 0; i < m; ++i) {
        const float* arow = a + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const float* brow = b + kk * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                acc += static_cast<double>(arow[j]) * brow[j];
            }
            c[i * k + kk] = static_cast<float>(acc);
        }
    }
    return c;
}

// c[k x n] = a[m x k]^T @ b[m x n]
std::vector<float> mm_tn(const float* a, const float* b, std::size_t m, std::size_t k,
                         std::size_t n) {
    std::vector<double> acc(k * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const float* arow = a + i * k;
        const float* brow = b + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            double av = arow[kk];
            double* crow = acc.data() + kk * n;
            for (std::size_t j = 0; j < n; ++j) {
                crow[j] += av * brow[j];
            }
        }
    }
    std::vector<float> c(k * n);
    for (std::size_t i = 0; i < k * n; ++i) {
        c[i] = static_cast<float>(acc[i]);
    }
    return c;
}

constexpr double kGeluCoeff = 0.044715;
const double kGeluScale = std::sqrt(2.0 / 3.14159265358979323846);

}  // namespace

void set_checked_mode(bool enabled) { g_checked.store(enabled, std::memory_order_relaxed); }
bool checked_mode() { return g_checked.load(std::memory_order_relaxed); }

std::string shape_string(const std::vector<std::size_t>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) {
            s += "x";
        }
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

TensorPtr Tensor::create(std::vector<std::size_t> shape, std::vector<float> values,
                         bool requires_grad) {
    if (shape_product(shape) != values.size()) {
        throw InternalError("tensor create: shape " + shape_string(shape) + " implies " +
                            std::to_string(shape_product(shape)) + " values, got " +
                            std::to_string(values.size()));
    }
    auto t = std::make_shared<Tensor>();
    t->shape = std::move(shape);
    t->data = std::move(values);
    t->requires_grad = requires_grad;
    check_finite(*t, "create");
    return t;
}

TensorPtr Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
    std::size_t n = shape_product(shape);
    return create(std::move(shape), std::vector<float>(n, 0.0f), requires_grad);
}

TensorPtr Tensor::full(std::vector<std::size_t> shape, float value, bool requires_grad) {
    std::size_t n = shape_product(shape);
    return create(std::move(shape), std::vector<float>(n, value), requires_grad);
}

TensorPtr Tensor::scalar(float value, bool requires_grad) {
    return create({1}, {value}, requires_grad);
}

TensorPtr Tensor::randn(std::vector<std::size_t> shape, float stddev, Rng& rng,
                        bool requires_grad) {
    std::size_t n = shape_product(shape);
    std::vector<float> values(n);
    for (std::size_t i = 0; i < n; ++i) {
        values[i] = static_cast<float>(rng.normal()) * stddev;
    }
    return create(std::move(shape), std::move(values), requires_grad);
}

float Tensor::item() const {
    require(data.size() == 1, "item() on non-scalar tensor of shape " + shape_string(shape));
    return data[0];
}

void Tensor::ensure_grad() {
    if (grad.size() != data.size()) {
        grad.assign(data.size(), 0.0f);
    }
}

void Tensor::zero_grad() {
    if (!grad.empty()) {
        std::fill(grad.begin(), grad.end(), 0.0f);
    }
}

// ---------------------------------------------------------------- elementwise

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
    require(a->shape == b->shape, "add: shape mismatch " + shape_string(a->shape) + " vs " +
                                      shape_string(b->shape));
    std::vector<float> out(a->size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a->data[i] + b->data[i];
    }
    auto t = make_node(a->shape, std::move(out), {a, b}, "add");
    if (t->requires_grad) {
        Tensor* pa = a.get();
        Tensor* pb = b.get();
        t->backward_fn = [pa, pb](Tensor& self) {
            if (pa->requires_grad) {
                pa->ensure_grad();
                for (std::size_t i = 0; i < self.grad.size(); ++i) {
                    pa->grad[i] += self.grad[i];
                }
            }
            if (pb->requires_grad) {
                pb->ensure_grad();
                for (std::size_t i = 0; i < self.grad.size(); ++i) {
                    pb->grad[i] += self.grad[i];
                }
            }
        };
    }
    return t;
}

TensorPtr sub(const TensorPtr& a, const TensorPtr& b) {
    require(a->shape == b->shape, "sub: shape mismatch " + shape_string(a->shape) + " vs " +
                                      shape_string(b->shape));
    std::vector<float> out(a->size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a->data[i] - b->data[i];
    }
    auto t = make_node(a->shape, std::move(out), {a, b}, "sub");
    if (t->requires_grad) {
        Tensor* pa = a.get();
        Tensor* pb = b.get();
        t->backward_fn = [pa, pb](Tensor& self) {
            if (pa->requires_grad) {
                pa->ensure_grad();
                for (std::size_t i = 0; i < self.grad.size(); ++i) {
                    pa->grad[i] += self.grad[i];
                }
            }
            if (pb->requires_grad) {
                pb->ensure_grad();
                for (std::size_t i = 0; i < self.grad.size(); ++i) {
                    pb->grad[i] -= self.grad[i];
                }
            }
        };
    }
    return t;
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
    require(a->shape == b->shape, "mul: shape mismatch " + shape_string(a->shape) + " vs " +
                                      shape_string(b->shape));
    std::vector<float> out(a->size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a->data[i] * b->data[i];
    }
    auto t = make_node(a->shape, std::move(out), {a, b}, "mul");
    if (t->requires_grad) {
        Tensor* pa = a.get();
        Tensor* pb = b.get();
        t->backward_fn = [pa, pb](Tensor& self) {
            if (pa->requires_grad) {
                pa->ensure_grad();
                for (std::size_t i = 0; i < self.grad.size(); ++i) {
                    pa->grad[i] += pb->data[i] * self.grad[i];
                }
            }
            if (pb->requires_grad) {
                pb->ensure_grad();
                for (std::size_t i = 0; i < self.grad.size(); ++i) {
                    pb->grad[i] += pa->data[i] * self.grad[i];
                }
            }
        };
    }
    return t;
}

TensorPtr scale(const TensorPtr& a, float factor) {
    std::vector<float> out(a->size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a->data[i] * factor;
    }
    auto t = make_node(a->shape, std::move(out), {a}, "scale");
    if (t->requires_grad) {
        Tensor* pa = a.get();
        t->backward_fn = [pa, factor](Tensor& self) {
            pa->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                pa->grad[i] += factor * self.grad[i];
            }
        };
    }
    return t;
}

TensorPtr add_scalar(const TensorPtr& a, float value) {
    std::vector<float> out(a->size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a->data[i] + value;
    }
    auto t = make_node(a->shape, std::move(out), {a}, "add_scalar");
    if (t->requires_grad) {
        Tensor* pa = a.get();
        t->backward_fn = [pa](Tensor& self) {
            pa->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                pa->grad[i] += self.grad[i];
            }
        };
    }
    return t;
}

// Tanh approximation: 0.5*x*(1 + tanh(sqrt(2/pi)*(x + 0.044715*x^3))).
TensorPtr gelu(const TensorPtr& x) {
    std::vector<float> out(x->size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        double v = x->data[i];
        double inner = kGeluScale * (v + kGeluCoeff * v * v * v);
        out[i] = static_cast<float>(0.5 * v * (1.0 + std::tanh(inner)));
    }
    auto t = make_node(x->shape, std::move(out), {x}, "gelu");
    if (t->requires_grad) {
        Tensor* px = x.get();
        t->backward_fn = [px](Tensor& self) {
            px->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                double v = px->data[i];
                double inner = kGeluScale * (v + kGeluCoeff * v * v * v);
                double th = std::tanh(inner);
                double sech2 = 1.0 - th * th;
                double dinner = kGeluScale * (1.0 + 3.0 * kGeluCoeff * v * v);
                double d = 0.5 * (1.0 + th) + 0.5 * v * sech2 * dinner;
                px->grad[i] += static_cast<float>(d) * self.grad[i];
            }
        };
    }
    return t;
}

// ------------------------------------------------------------- linear algebra

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
    require_rank2(a, "matmul");
    require_rank2(b, "matmul");
    if (a->shape[1] != b->shape[0]) {
        throw InternalError("matmul: inner extents disagree, " + shape_string(a->shape) +
                            " vs " + shape_string(b->shape));
    }
    std::size_t m = a->shape[0];
    std::size_t k = a->shape[1];
    std::size_t n = b->shape[1];
    auto t = make_node({m, n}, mm_nn(a->data.data(), b->data.data(), m, k, n), {a, b},
                       "matmul");
    if (t->requires_grad) {
        Tensor* pa = a.get();
        Tensor* pb = b.get();
        t->backward_fn = [pa, pb, m, k, n](Tensor& self) {
            if (pa->requires_grad) {
                std::vector<float> ga = mm_nt(self.grad.data(), pb->data.data(), m, n, k);
                pa->ensure_grad();
                for (std::size_t i = 0; i < ga.size(); ++i) {
                    pa->grad[i] += ga[i];
                }
            }
            if (pb->requires_grad) {
                std::vector<float> gb = mm_tn(pa->data.data(), self.grad.data(), m, k, n);
                pb->ensure_grad();
                for (std::size_t i = 0; i < gb.size(); ++i) {
                    pb->grad[i] += gb[i];
                }
            }
        };
    }
    return t;
}

TensorPtr transpose(const TensorPtr& a) {
    require_rank2(a, "transpose");
    std::size_t m = a->shape[0];
    std::size_t n = a->shape[1];
    std::vector<float> out(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            out[j * m + i] = a->data[i * n + j];
        }
    }
    auto t = make_node({n, m}, std::move(out), {a}, "transpose");
    if (t->requires_grad) {
        Tensor* pa = a.get();
        t->backward_fn = [pa, m, n](Tensor& self) {
            pa->ensure_grad();
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    pa->grad[i * n + j] += self.grad[j * m + i];
                }
            }
        };
    }
    return t;
}

// --------------------------------------------------------- softmax / layernorm

namespace {

// Lane view of a 1-D or 2-D tensor along `axis`: lanes of length `len`,
// element l*stride within the lane, lane origin via origin(lane).
struct LaneLayout {
    std::size_t count;
    std::size_t len;
    std::size_t stride;
    std::size_t lane_origin_stride;
};

LaneLayout lanes_along(const Tensor& t, std::size_t axis) {
    if (t.rank() == 1) {
        require(axis == 0, "softmax: axis out of range for rank-1 tensor");
        return {1, t.shape[0], 1, 0};
    }
    require(t.rank() == 2 && axis < 2,
            "softmax: expected rank 1 or 2 with valid axis, got shape " +
                shape_string(t.shape) + " axis " + std::to_string(axis));
    if (axis == 1) {
        return {t.shape[0], t.shape[1], 1, t.shape[1]};
    }
    return {t.shape[1], t.shape[0], t.shape[1], 1};
}

}  // namespace

TensorPtr softmax(const TensorPtr& x, std::size_t axis) {
    LaneLayout ll = lanes_along(*x, axis);
    std::vector<float> out(x->size());
    for (std::size_t lane = 0; lane < ll.count; ++lane) {
        std::size_t base = lane * ll.lane_origin_stride;
        double mx = -1e300;
        for (std::size_t l = 0; l < ll.len; ++l) {
            mx = std::max(mx, static_cast<double>(x->data[base + l * ll.stride]));
        }
        double denom = 0.0;
        for (std::size_t l = 0; l < ll.len; ++l) {
            denom += std::exp(static_cast<double>(x->data[base + l * ll.stride]) - mx);
        }
        for (std::size_t l = 0; l < ll.len; ++l) {
            double e = std::exp(static_cast<double>(x->data[base + l * ll.stride]) - mx);
            out[base + l * ll.stride] = static_cast<float>(e / denom);
        }
    }
    auto t = make_node(x->shape, std::move(out), {x}, "softmax");
    if (t->requires_grad) {
        Tensor* px = x.get();
        t->backward_fn = [px, ll](Tensor& self) {
            px->ensure_grad();
            for (std::size_t lane = 0; lane < ll.count; ++lane) {
                std::size_t base = lane * ll.lane_origin_stride;
                double dot = 0.0;
                for (std::size_t l = 0; l < ll.len; ++l) {
                    std::size_t idx = base + l * ll.stride;
                    dot += static_cast<double>(self.grad[idx]) * self.data[idx];
                }
                for (std::size_t l = 0; l < ll.len; ++l) {
                    std::size_t idx = base + l * ll.stride;
                    px->grad[idx] += static_cast<float>(
                        static_cast<double>(self.data[idx]) *
                        (static_cast<double>(self.grad[idx]) - dot));
                }
            }
        };
    }
    return t;
}

TensorPtr layer_norm(const TensorPtr& x, const TensorPtr& gain, const TensorPtr& bias,
                     float epsilon) {
    if (epsilon <= 0.0f) {
        throw InternalError("layer_norm: epsilon must be positive");
    }
    std::size_t d = x->shape.back();
    require(gain->size() == d && bias->size() == d,
            "layer_norm: gain/bias length must match last extent " + std::to_string(d));
    std::size_t rows = x->size() / d;
    std::vector<float> out(x->size());
    std::vector<float> xhat(x->size());
    std::vector<float> inv_std(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const float* xr = x->data.data() + r * d;
        double mu = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            mu += xr[j];
        }
        mu /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            double c = xr[j] - mu;
            var += c * c;
        }
        var /= static_cast<double>(d);
        double istd = 1.0 / std::sqrt(var + epsilon);
        inv_std[r] = static_cast<float>(istd);
        for (std::size_t j = 0; j < d; ++j) {
            float h = static_cast<float>((xr[j] - mu) * istd);
            xhat[r * d + j] = h;
            out[r * d + j] = gain->data[j] * h + bias->data[j];
        }
    }
    auto t = make_node(x->shape, std::move(out), {x, gain, bias}, "layer_norm");
    if (t->requires_grad) {
        Tensor* px = x.get();
        Tensor* pg = gain.get();
        Tensor* pb = bias.get();
        auto xhat_s = std::make_shared<std::vector<float>>(std::move(xhat));
        auto istd_s = std::make_shared<std::vector<float>>(std::move(inv_std));
        t->backward_fn = [px, pg, pb, xhat_s, istd_s, rows, d](Tensor& self) {
            const std::vector<float>& h = *xhat_s;
            for (std::size_t r = 0; r < rows; ++r) {
                const float* gr = self.grad.data() + r * d;
                if (pg->requires_grad) {
                    pg->ensure_grad();
                    for (std::size_t j = 0; j < d; ++j) {
                        pg->grad[j] += gr[j] * h[r * d + j];
                    }
                }
                if (pb->requires_grad) {
                    pb->ensure_grad();
                    for (std::size_t j = 0; j < d; ++j) {
                        pb->grad[j] += gr[j];
                    }
                }
                if (px->requires_grad) {
                    px->ensure_grad();
                    // dxhat = g * gain; dx = istd * (dxhat - mean(dxhat)
                    //        - xhat * mean(dxhat * xhat))
                    double mean_dh = 0.0;
                    double mean_dh_h = 0.0;
                    for (std::size_t j = 0; j < d; ++j) {
                        double dh = static_cast<double>(gr[j]) * pg->data[j];
                        mean_dh += dh;
                        mean_dh_h += dh * h[r * d + j];
                    }
                    mean_dh /= static_cast<double>(d);
                    mean_dh_h /= static_cast<double>(d);
                    double istd = (*istd_s)[r];
                    for (std::size_t j = 0; j < d; ++j) {
                        double dh = static_cast<double>(gr[j]) * pg->data[j];
                        px->grad[r * d + j] += static_cast<float>(
                            istd * (dh - mean_dh - h[r * d + j] * mean_dh_h));
                    }
                }
            }
        };
    }
    return t;
}

TensorPtr cross_entropy(const TensorPtr& logits, const std::vector<int>& labels,
                        int ignore_index) {
    require_rank2(logits, "cross_entropy");
    std::size_t n = logits->shape[0];
    std::size_t c = logits->shape[1];
    require(labels.size() == n, "cross_entropy: got " + std::to_string(labels.size()) +
                                    " labels for " + std::to_string(n) + " rows");
    std::size_t counted = 0;
    double total = 0.0;
    std::vector<float> probs(n * c, 0.0f);
    for (std::size_t i = 0; i < n; ++i) {
        int y = labels[i];
        if (y == ignore_index) {
            continue;
        }
        require(y >= 0 && static_cast<std::size_t>(y) < c,
                "cross_entropy: label " + std::to_string(y) + " out of range [0," +
                    std::to_string(c) + ")");
        const float* row = logits->data.data() + i * c;
        double mx = row[0];
        for (std::size_t j = 1; j < c; ++j) {
            mx = std::max(mx, static_cast<double>(row[j]));
        }
        double denom = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            denom += std::exp(static_cast<double>(row[j]) - mx);
        }
        double log_denom = std::log(denom);
        for (std::size_t j = 0; j < c; ++j) {
            probs[i * c + j] =
                static_cast<float>(std::exp(static_cast<double>(row[j]) - mx) / denom);
        }
        total += -(static_cast<double>(row[static_cast<std::size_t>(y)]) - mx - log_denom);
        ++counted;
    }
    if (counted == 0) {
        throw DataError("cross_entropy: every position is ignored (empty batch)");
    }
    auto t = make_node({1}, {static_cast<float>(total / static_cast<double>(counted))},
                       {logits}, "cross_entropy");
    if (t->requires_grad) {
        Tensor* pl = logits.get();
        auto probs_s = std::make_shared<std::vector<float>>(std::move(probs));
        auto labels_s = std::make_shared<std::vector<int>>(labels);
        t->backward_fn = [pl, probs_s, labels_s, n, c, counted, ignore_index](Tensor& self) {
            pl->ensure_grad();
            float g = self.grad[0] / static_cast<float>(counted);
            for (std::size_t i = 0; i < n; ++i) {
                int y = (*labels_s)[i];
                if (y == ignore_index) {
                    continue;
                }
                for (std::size_t j = 0; j < c; ++j) {
                    float delta = (static_cast<std::size_t>(y) == j) ? 1.0f : 0.0f;
                    pl->grad[i * c + j] += g * ((*probs_s)[i * c + j] - delta);
                }
            }
        };
    }
    return t;
}

TensorPtr mse(const TensorPtr& pred, const TensorPtr& target) {
    require(pred->shape == target->shape, "mse: shape mismatch " + shape_string(pred->shape) +
                                              " vs " + shape_string(target->shape));
    require(pred->size() > 0, "mse: empty tensors");
    double total = 0.0;
    for (std::size_t i = 0; i < pred->size(); ++i) {
        double d = static_cast<double>(pred->data[i]) - target->data[i];
        total += d * d;
    }
    std::size_t n = pred->size();
    auto t = make_node({1}, {static_cast<float>(total / static_cast<double>(n))},
                       {pred, target}, "mse");
    if (t->requires_grad) {
        Tensor* pp = pred.get();
        Tensor* pt = target.get();
        t->backward_fn = [pp, pt, n](Tensor& self) {
            float g = self.grad[0] * 2.0f / static_cast<float>(n);
            if (pp->requires_grad) {
                pp->ensure_grad();
                for (std::size_t i = 0; i < n; ++i) {
                    pp->grad[i] += g * (pp->data[i] - pt->data[i]);
                }
            }
            if (pt->requires_grad) {
                pt->ensure_grad();
                for (std::size_t i = 0; i < n; ++i) {
                    pt->grad[i] -= g * (pp->data[i] - pt->data[i]);
                }
            }
        };
    }
    return t;
}

// ------------------------------------------------------------------ reductions

TensorPtr sum(const TensorPtr& a) {
    double total = 0.0;
    for (float v : a->data) {
        total += v;
    }
    auto t = make_node({1}, {static_cast<float>(total)}, {a}, "sum");
    if (t->requires_grad) {
        Tensor* pa = a.get();
        t->backward_fn = [pa](Tensor& self) {
            pa->ensure_grad();
            for (std::size_t i = 0; i < pa->grad.size(); ++i) {
                pa->grad[i] += self.grad[0];
            }
        };
    }
    return t;
}

TensorPtr mean(const TensorPtr& a) {
    require(a->size() > 0, "mean: empty tensor");
    double total = 0.0;
    for (float v : a->data) {
        total += v;
    }
    std::size_t n = a->size();
    auto t = make_node({1}, {static_cast<float>(total / static_cast<double>(n))}, {a},
                       "mean");
    if (t->requires_grad) {
        Tensor* pa = a.get();
        t->backward_fn = [pa, n](Tensor& self) {
            pa->ensure_grad();
            float g = self.grad[0] / static_cast<float>(n);
            for (std::size_t i = 0; i < pa->grad.size(); ++i) {
                pa->grad[i] += g;
            }
        };
    }
    return t;
}

TensorPtr sum_axis1(const TensorPtr& a) {
    require_rank2(a, "sum_axis1");
    std::size_t m = a->shape[0];
    std::size_t n = a->shape[1];
    std::vector<float> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            acc += a->data[i * n + j];
        }
        out[i] = static_cast<float>(acc);
    }
    auto t = make_node({m}, std::move(out), {a}, "sum_axis1");
    if (t->requires_grad) {
        Tensor* pa = a.get();
        t->backward_fn = [pa, m, n](Tensor& self) {
            pa->ensure_grad();
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    pa->grad[i * n + j] += self.grad[i];
                }
            }
        };
    }
    return t;
}

// ------------------------------------------------------------------ structural

TensorPtr select_rows(const TensorPtr& x, const std::vector<std::size_t>& rows) {
    require_rank2(x, "select_rows");
    std::size_t d = x->shape[1];
    std::vector<float> out(rows.size() * d);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        require(rows[i] < x->shape[0], "select_rows: row index " + std::to_string(rows[i]) +
                                           " out of range for " + shape_string(x->shape));
        std::memcpy(out.data() + i * d, x->data.data() + rows[i] * d, d * sizeof(float));
    }
    auto t = make_node({rows.size(), d}, std::move(out), {x}, "select_rows");
    if (t->requires_grad) {
        Tensor* px = x.get();
        auto rows_s = std::make_shared<std::vector<std::size_t>>(rows);
        t->backward_fn = [px, rows_s, d](Tensor& self) {
            px->ensure_grad();
            for (std::size_t i = 0; i < rows_s->size(); ++i) {
                std::size_t r = (*rows_s)[i];
                for (std::size_t j = 0; j < d; ++j) {
                    px->grad[r * d + j] += self.grad[i * d + j];
                }
            }
        };
    }
    return t;
}

TensorPtr mean_rows(const TensorPtr& x, const std::vector<std::size_t>& rows) {
    require_rank2(x, "mean_rows");
    require(!rows.empty(), "mean_rows: empty row selection");
    std::size_t d = x->shape[1];
    std::vector<double> acc(d, 0.0);
    for (std::size_t r : rows) {
        require(r < x->shape[0], "mean_rows: row index out of range");
        for (std::size_t j = 0; j < d; ++j) {
            acc[j] += x->data[r * d + j];
        }
    }
    std::vector<float> out(d);
    for (std::size_t j = 0; j < d; ++j) {
        out[j] = static_cast<float>(acc[j] / static_cast<double>(rows.size()));
    }
    auto t = make_node({d}, std::move(out), {x}, "mean_rows");
    if (t->requires_grad) {
        Tensor* px = x.get();
        auto rows_s = std::make_shared<std::vector<std::size_t>>(rows);
        t->backward_fn = [px, rows_s, d](Tensor& self) {
            px->ensure_grad();
            float inv = 1.0f / static_cast<float>(rows_s->size());
            for (std::size_t r : *rows_s) {
                for (std::size_t j = 0; j < d; ++j) {
                    px->grad[r * d + j] += self.grad[j] * inv;
                }
            }
        };
    }
    return t;
}

TensorPtr concat_rows(const TensorPtr& a, const TensorPtr& b) {
    require_rank2(a, "concat_rows");
    require_rank2(b, "concat_rows");
    require(a->shape[1] == b->shape[1], "concat_rows: column mismatch " +
                                            shape_string(a->shape) + " vs " +
                                            shape_string(b->shape));
    std::size_t d = a->shape[1];
    std::vector<float> out;
    out.reserve(a->size() + b->size());
    out.insert(out.end(), a->data.begin(), a->data.end());
    out.insert(out.end(), b->data.begin(), b->data.end());
    auto t = make_node({a->shape[0] + b->shape[0], d}, std::move(out), {a, b}, "concat_rows");
    if (t->requires_grad) {
        Tensor* pa = a.get();
        Tensor* pb = b.get();
        std::size_t split = a->size();
        t->backward_fn = [pa, pb, split](Tensor& self) {
            if (pa->requires_grad) {
                pa->ensure_grad();
                for (std::size_t i = 0; i < split; ++i) {
                    pa->grad[i] += self.grad[i];
                }
            }
            if (pb->requires_grad) {
                pb->ensure_grad();
                for (std::size_t i = split; i < self.grad.size(); ++i) {
                    pb->grad[i - split] += self.grad[i];
                }
            }
        };
    }
    return t;
}

TensorPtr concat_cols(const std::vector<TensorPtr>& parts) {
    require(!parts.empty(), "concat_cols: no parts");
    std::size_t m = parts[0]->shape[0];
    std::size_t total = 0;
    for (const auto& p : parts) {
        require_rank2(p, "concat_cols");
        require(p->shape[0] == m, "concat_cols: row mismatch");
        total += p->shape[1];
    }
    std::vector<float> out(m * total);
    std::size_t off = 0;
    for (const auto& p : parts) {
        std::size_t d = p->shape[1];
        for (std::size_t i = 0; i < m; ++i) {
            std::memcpy(out.data() + i * total + off, p->data.data() + i * d,
                        d * sizeof(float));
        }
        off += d;
    }
    auto t = make_node({m, total}, std::move(out), parts, "concat_cols");
    if (t->requires_grad) {
        std::vector<Tensor*> raw;
        std::vector<std::size_t> widths;
        for (const auto& p : parts) {
            raw.push_back(p.get());
            widths.push_back(p->shape[1]);
        }
        t->backward_fn = [raw, widths, m, total](Tensor& self) {
            std::size_t off = 0;
            for (std::size_t k = 0; k < raw.size(); ++k) {
                std::size_t d = widths[k];
                if (raw[k]->requires_grad) {
                    raw[k]->ensure_grad();
                    for (std::size_t i = 0; i < m; ++i) {
                        for (std::size_t j = 0; j < d; ++j) {
                            raw[k]->grad[i * d + j] += self.grad[i * total + off + j];
                        }
                    }
                }
                off += d;
            }
        };
    }
    return t;
}

TensorPtr slice_cols(const TensorPtr& x, std::size_t first, std::size_t last) {
    require_rank2(x, "slice_cols");
    require(first < last && last <= x->shape[1],
            "slice_cols: bad range [" + std::to_string(first) + "," + std::to_string(last) +
                ") for " + shape_string(x->shape));
    std::size_t m = x->shape[0];
    std::size_t n = x->shape[1];
    std::size_t d = last - first;
    std::vector<float> out(m * d);
    for (std::size_t i = 0; i < m; ++i) {
        std::memcpy(out.data() + i * d, x->data.data() + i * n + first, d * sizeof(float));
    }
    auto t = make_node({m, d}, std::move(out), {x}, "slice_cols");
    if (t->requires_grad) {
        Tensor* px = x.get();
        t->backward_fn = [px, m, n, d, first](Tensor& self) {
            px->ensure_grad();
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < d; ++j) {
                    px->grad[i * n + first + j] += self.grad[i * d + j];
                }
            }
        };
    }
    return t;
}

TensorPtr append_ones_column(const TensorPtr& x) {
    require_rank2(x, "append_ones_column");
    std::size_t m = x->shape[0];
    std::size_t n = x->shape[1];
    std::vector<float> out(m * (n + 1));
    for (std::size_t i = 0; i < m; ++i) {
        std::memcpy(out.data() + i * (n + 1), x->data.data() + i * n, n * sizeof(float));
        out[i * (n + 1) + n] = 1.0f;
    }
    auto t = make_node({m, n + 1}, std::move(out), {x}, "append_ones_column");
    if (t->requires_grad) {
        Tensor* px = x.get();
        t->backward_fn = [px, m, n](Tensor& self) {
            px->ensure_grad();
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    px->grad[i * n + j] += self.grad[i * (n + 1) + j];
                }
            }
        };
    }
    return t;
}

TensorPtr reshape(const TensorPtr& x, std::vector<std::size_t> shape) {
    require(shape_product(shape) == x->size(), "reshape: size mismatch " +
                                                   shape_string(x->shape) + " -> " +
                                                   shape_string(shape));
    auto t = make_node(std::move(shape), x->data, {x}, "reshape");
    if (t->requires_grad) {
        Tensor* px = x.get();
        t->backward_fn = [px](Tensor& self) {
            px->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                px->grad[i] += self.grad[i];
            }
        };
    }
    return t;
}

TensorPtr substitute_rows(const TensorPtr& x, const std::vector<std::uint8_t>& row_mask,
                          const TensorPtr& row) {
    require_rank2(x, "substitute_rows");
    std::size_t m = x->shape[0];
    std::size_t d = x->shape[1];
    require(row_mask.size() == m, "substitute_rows: mask length " +
                                      std::to_string(row_mask.size()) + " vs " +
                                      std::to_string(m) + " rows");
    require(row->size() == d, "substitute_rows: row length mismatch");
    std::vector<float> out(x->data);
    for (std::size_t i = 0; i < m; ++i) {
        if (row_mask[i]) {
            std::memcpy(out.data() + i * d, row->data.data(), d * sizeof(float));
        }
    }
    auto t = make_node({m, d}, std::move(out), {x, row}, "substitute_rows");
    if (t->requires_grad) {
        Tensor* px = x.get();
        Tensor* pr = row.get();
        auto mask_s = std::make_shared<std::vector<std::uint8_t>>(row_mask);
        t->backward_fn = [px, pr, mask_s, m, d](Tensor& self) {
            for (std::size_t i = 0; i < m; ++i) {
                if ((*mask_s)[i]) {
                    if (pr->requires_grad) {
                        pr->ensure_grad();
                        for (std::size_t j = 0; j < d; ++j) {
                            pr->grad[j] += self.grad[i * d + j];
                        }
                    }
                } else if (px->requires_grad) {
                    px->ensure_grad();
                    for (std::size_t j = 0; j < d; ++j) {
                        px->grad[i * d + j] += self.grad[i * d + j];
                    }
                }
            }
        };
    }
    return t;
}

TensorPtr add_row_broadcast(const TensorPtr& x, const TensorPtr& row) {
    require_rank2(x, "add_row_broadcast");
    std::size_t m = x->shape[0];
    std::size_t d = x->shape[1];
    require(row->size() == d, "add_row_broadcast: row length " + std::to_string(row->size()) +
                                  " vs " + std::to_string(d) + " columns");
    std::vector<float> out(x->size());
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            out[i * d + j] = x->data[i * d + j] + row->data[j];
        }
    }
    auto t = make_node({m, d}, std::move(out), {x, row}, "add_row_broadcast");
    if (t->requires_grad) {
        Tensor* px = x.get();
        Tensor* pr = row.get();
        t->backward_fn = [px, pr, m, d](Tensor& self) {
            if (px->requires_grad) {
                px->ensure_grad();
                for (std::size_t i = 0; i < self.grad.size(); ++i) {
                    px->grad[i] += self.grad[i];
                }
            }
            if (pr->requires_grad) {
                pr->ensure_grad();
                for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t j = 0; j < d; ++j) {
                        pr->grad[j] += self.grad[i * d + j];
                    }
                }
            }
        };
    }
    return t;
}

TensorPtr dropout(const TensorPtr& x, float rate, Rng& rng) {
    if (rate <= 0.0f) {
        return x;
    }
    require(rate < 1.0f, "dropout: rate must be < 1");
    float keep = 1.0f - rate;
    std::vector<float> mask(x->size());
    std::vector<float> out(x->size());
    for (std::size_t i = 0; i < x->size(); ++i) {
        mask[i] = (rng.uniform() < keep) ? 1.0f / keep : 0.0f;
        out[i] = x->data[i] * mask[i];
    }
    auto t = make_node(x->shape, std::move(out), {x}, "dropout");
    if (t->requires_grad) {
        Tensor* px = x.get();
        auto mask_s = std::make_shared<std::vector<float>>(std::move(mask));
        t->backward_fn = [px, mask_s](Tensor& self) {
            px->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                px->grad[i] += self.grad[i] * (*mask_s)[i];
            }
        };
    }
    return t;
}

// -------------------------------------------------------------------- backward

void backward(const TensorPtr& loss) {
    if (!loss->is_scalar()) {
        throw InternalError("backward: root must be scalar, got shape " +
                            shape_string(loss->shape));
    }
    if (!loss->requires_grad) {
        throw InternalError("backward: root is not connected to any tracked tensor");
    }
    // Iterative post-order DFS.
    std::vector<Tensor*> order;
    std::unordered_set<Tensor*> visited;
    std::vector<std::pair<Tensor*, std::size_t>> stack;
    stack.emplace_back(loss.get(), 0);
    visited.insert(loss.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Tensor* parent = node->parents[next].get();
            ++next;
            if (parent->requires_grad && !visited.count(parent)) {
                visited.insert(parent);
                stack.emplace_back(parent, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    // Interior grads are scratch per call; leaf grads persist and accumulate.
    for (Tensor* node : order) {
        if (!node->is_leaf()) {
            node->ensure_grad();
            node->zero_grad();
        }
    }
    if (loss->is_leaf()) {
        loss->ensure_grad();
    }
    loss->grad[0] += 1.0f;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Tensor* node = *it;
        if (node->backward_fn) {
            node->backward_fn(*node);
        }
    }
}

}  // namespace pixeltext
