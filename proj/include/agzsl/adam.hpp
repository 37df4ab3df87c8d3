#pragma once

#include <cstdint>
#include <vector>

#include "agzsl/tensor.hpp"

namespace agzsl::num {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam over a fixed list of parameter tensors.
class Adam {
public:
    Adam(AdamConfig cfg, const std::vector<Tensor*>& params);

    // Applies one update in place. grads must align with the construction
    // parameter list, shape for shape.
    void step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads);

    const AdamConfig& config() const { return cfg_; }
    std::uint64_t steps() const { return t_; }

    // Checkpoint access.
    std::vector<Tensor>& first_moments() { return m_; }
    std::vector<Tensor>& second_moments() { return v_; }
    void set_steps(std::uint64_t t) { t_ = t; }

private:
    AdamConfig cfg_;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
    std::uint64_t t_ = 0;
};

}  // namespace agzsl::num
