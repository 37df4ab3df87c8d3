#pragma once

#include "agzsl/tensor.hpp"

namespace agzsl::pmi {

// Row-wise softmax converting class semantic vectors to attribute
// distributions.
num::Tensor class_distributions(const num::Tensor& class_sem);

// Joint over (target class, source class) built from the two distribution
// matrices and normalized to a genuine probability table, plus its marginals.
struct Joint {
    num::Tensor joint;   // Ct x Cs, sums to 1
    num::Tensor marg_t;  // Ct row sums
    num::Tensor marg_s;  // Cs column sums
};

Joint joint_distribution(const num::Tensor& z_target, const num::Tensor& z_source);

// Pointwise mutual information per (source, target) class pair. Zero-joint
// cells are clamped to the floor.
struct PmiMatrix {
    num::Tensor values;  // Cs x Ct
    double floor;
};

PmiMatrix pmi_matrix(const Joint& j, double floor = -30.0);

// Order-preserving map of positive pmi into [0,1] soft labels for the
// target-index loss.
num::Tensor soft_targets(const PmiMatrix& p);

// Full pipeline: semantics in, soft targets out.
num::Tensor soft_targets_from_semantics(const num::Tensor& source_sem,
                                        const num::Tensor& target_sem);

}  // namespace agzsl::pmi
