#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tensor/tensor.hpp"

namespace pixeltext {

// Ordered name -> parameter table. Order is insertion order and defines the
// optimizer-state and checkpoint layout.
class ParamStore {
public:
    TensorPtr add(const std::string& name, TensorPtr value);
    TensorPtr get(const std::string& name) const;
    bool contains(const std::string& name) const;

    std::size_t count() const { return entries_.size(); }
    std::size_t total_values() const;
    void zero_grads();

    const std::vector<std::pair<std::string, TensorPtr>>& entries() const { return entries_; }

    // Deep copy of parameter values (snapshot for best-checkpoint tracking).
    std::vector<std::vector<float>> snapshot() const;
    void restore(const std::vector<std::vector<float>>& snapshot);

    void merge(const ParamStore& other);

private:
    std::vector<std::pair<std::string, TensorPtr>> entries_;
};

struct AdamWConfig {
    float learning_rate = 1e-3f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float epsilon = 1e-8f;
    float weight_decay = 0.0f;
};

// Adam with decoupled weight decay and bias correction. Moments are laid out
// in the ParamStore's order; step() applies one update from the accumulated
// grads (grads are not cleared here).
class AdamW {
public:
    AdamW(const ParamStore& params, AdamWConfig config);

    // lr_override < 0 means use config learning rate (schedules pass the
    // current rate explicitly).
    void step(ParamStore& params, float lr_override = -1.0f);

    std::uint64_t step_count() const { return step_count_; }
    const AdamWConfig& config() const { return config_; }

private:
    AdamWConfig config_;
    std::uint64_t step_count_ = 0;
    std::vector<std::vector<float>> first_moment_;
    std::vector<std::vector<float>> second_moment_;
};

}  // namespace pixeltext
