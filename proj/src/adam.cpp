#include "disco/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace disco {

AdamOptimizer::AdamOptimizer(std::vector<Tensor> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
    for (const Tensor& p : params_) {
        if (!p.requires_grad())
            throw std::invalid_argument("adam: parameter without a gradient buffer");
        first_moment_.emplace_back(p.size(), 0.0);
        second_moment_.emplace_back(p.size(), 0.0);
    }
}

void AdamOptimizer::step() {
    ++step_count_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
    for (size_t pi = 0; pi < params_.size(); ++pi) {
        Tensor& p = params_[pi];
        std::vector<double>& m = first_moment_[pi];
        std::vector<double>& v = second_moment_[pi];
        const std::vector<double>& grad = p.grad();
        std::vector<double>& data = p.data();
        for (size_t i = 0; i < data.size(); ++i) {
            const double gv = grad[i];
            if (!std::isfinite(gv)) throw std::runtime_error("adam: non-finite gradient");
            if (cfg_.weight_decay != 0.0)
                data[i] -= cfg_.learning_rate * cfg_.weight_decay * data[i];
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gv;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gv * gv;
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            data[i] -= cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
        }
    }
}

void AdamOptimizer::zero_grad() {
    for (Tensor& p : params_) p.zero_grad();
}

}  // namespace disco
