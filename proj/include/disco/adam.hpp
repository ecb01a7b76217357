#pragma once

#include <vector>

#include "disco/tensor.hpp"

namespace disco {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;  // decoupled (applied to params, not grads)
};

// Bias-corrected Adam with optional decoupled weight decay. Moments are
// zero-initialized; step_count increments by exactly 1 per step().
class AdamOptimizer {
public:
    AdamOptimizer(std::vector<Tensor> params, AdamConfig cfg);

    void step();
    void zero_grad();

    long step_count() const { return step_count_; }
    const AdamConfig& config() const { return cfg_; }

private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> first_moment_;
    std::vector<std::vector<double>> second_moment_;
    AdamConfig cfg_;
    long step_count_ = 0;
};

}  // namespace disco
