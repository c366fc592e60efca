#include "tensor/adamw.hpp"

#include <cmath>

#include "common/error.hpp"

namespace pixeltext {

TensorPtr ParamStore::add(const std::string& name, TensorPtr value) {
    if (contains(name)) {
        throw InternalError("ParamStore: duplicate parameter name '" + name + "'");
    }
    value->requires_grad = true;
    entries_.emplace_back(name, value);
    return value;
}

TensorPtr ParamStore::get(const std::string& name) const {
    for (const auto& [n, t] : entries_) {
        if (n == name) {
            return t;
        }
    }
    throw InternalError("ParamStore: unknown parameter '" + name + "'");
}

bool ParamStore::contains(const std::string& name) const {
    for (const auto& [n, t] : entries_) {
        if (n == name) {
            return true;
        }
    }
    return false;
}

std::size_t ParamStore::total_values() const {
    std::size_t n = 0;
    for (const auto& [name, t] : entries_) {
        n += t->size();
    }
    return n;
}

void ParamStore::zero_grads() {
    for (auto& [name, t] : entries_) {
        t->zero_grad();
    }
}

std::vector<std::vector<float>> ParamStore::snapshot() const {
    std::vector<std::vector<float>> out;
    out.reserve(entries_.size());
    for (const auto& [name, t] : entries_) {
        out.push_back(t->data);
    }
    return out;
}

void ParamStore::restore(const std::vector<std::vector<float>>& snapshot) {
    if (snapshot.size() != entries_.size()) {
        throw InternalError("ParamStore: snapshot layout mismatch");
    }
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (snapshot[i].size() != entries_[i].second->data.size()) {
            throw InternalError("ParamStore: snapshot tensor size mismatch at '" +
                                entries_[i].first + "'");
        }
        entries_[i].second->data = snapshot[i];
    }
}

void ParamStore::merge(const ParamStore& other) {
    for (const auto& [name, t] : other.entries()) {
        add(name, t);
    }
}

AdamW::AdamW(const ParamStore& params, AdamWConfig config) : config_(config) {
    if (config_.beta1 < 0.0f || config_.beta1 >= 1.0f || config_.beta2 < 0.0f ||
        config_.beta2 >= 1.0f) {
        throw ConfigError("AdamW: betas must lie in [0, 1)");
    }
    if (config_.epsilon <= 0.0f) {
        throw ConfigError("AdamW: epsilon must be positive");
    }
    first_moment_.reserve(params.count());
    second_moment_.reserve(params.count());
    for (const auto& [name, t] : params.entries()) {
        first_moment_.emplace_back(t->size(), 0.0f);
        second_moment_.emplace_back(t->size(), 0.0f);
    }
}

void AdamW::step(ParamStore& params, float lr_override) {
    if (params.count() != first_moment_.size()) {
        throw InternalError("AdamW: parameter layout changed after construction");
    }
    float lr = lr_override >= 0.0f ? lr_override : config_.learning_rate;
    ++step_count_;
    double bc1 = 1.0 - std::pow(static_cast<double>(config_.beta1),
                                static_cast<double>(step_count_));
    double bc2 = 1.0 - std::pow(static_cast<double>(config_.beta2),
                                static_cast<double>(step_count_));
    bool checked = checked_mode();
    std::size_t pi = 0;
    for (auto& [name, t] : params.entries()) {
        auto& m = first_moment_[pi];
        auto& v = second_moment_[pi];
        ++pi;
        const bool has_grad = t->grad.size() == t->data.size();
        for (std::size_t i = 0; i < t->data.size(); ++i) {
            float g = has_grad ? t->grad[i] : 0.0f;
            if (checked && !std::isfinite(g)) {
                throw NumericError("AdamW: non-finite gradient in parameter '" + name + "'");
            }
            m[i] = config_.beta1 * m[i] + (1.0f - config_.beta1) * g;
            v[i] = config_.beta2 * v[i] + (1.0f - config_.beta2) * g * g;
            double m_hat = static_cast<double>(m[i]) / bc1;
            double v_hat = static_cast<double>(v[i]) / bc2;
            double update = m_hat / (std::sqrt(v_hat) + static_cast<double>(config_.epsilon));
            // Decoupled decay: applied to the parameter directly, not the grads.
            t->data[i] -= static_cast<float>(
                static_cast<double>(lr) *
                (update + static_cast<double>(config_.weight_decay) * t->data[i]));
        }
    }
}

}  // namespace pixeltext
