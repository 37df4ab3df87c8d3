#include "agzsl/pmi.hpp"

#include <algorithm>
#include <cmath>

namespace agzsl::pmi {

using num::Tensor;

Tensor class_distributions(const Tensor& class_sem) {
    if (class_sem.rank() != 2) throw DimensionError("class_distributions: want C x A");
    if (!class_sem.all_finite()) throw NumericError("class_distributions: non-finite input");
    std::size_t c = class_sem.extent(0), a = class_sem.extent(1);
    Tensor z({c, a});
    for (std::size_t i = 0; i < c; ++i) {
        double mx = class_sem.at(i, 0);
        for (std::size_t k = 1; k < a; ++k) mx = std::max(mx, class_sem.at(i, k));
        double total = 0.0;
        for (std::size_t k = 0; k < a; ++k) total += std::exp(class_sem.at(i, k) - mx);
        for (std::size_t k = 0; k < a; ++k) z.at(i, k) = std::exp(class_sem.at(i, k) - mx) / total;
    }
    return z;
}

Joint joint_distribution(const Tensor& z_target, const Tensor& z_source) {
    if (z_target.rank() != 2 || z_source.rank() != 2 || z_target.extent(1) != z_source.extent(1))
        throw DimensionError("joint_distribution: attribute counts differ");
    std::size_t ct = z_target.extent(0), cs = z_source.extent(0), a = z_target.extent(1);
    Joint out;
    out.joint = Tensor({ct, cs});
    double total = 0.0;
    for (std::size_t i = 0; i < ct; ++i)
        for (std::size_t j = 0; j < cs; ++j) {
            double v = 0.0;
            for (std::size_t k = 0; k < a; ++k) v += z_target.at(i, k) * z_source.at(j, k);
            out.joint.at(i, j) = v;
            total += v;
        }
    if (total <= 0.0) throw NumericError("joint_distribution: zero grand total");
    for (std::size_t i = 0; i < ct * cs; ++i) out.joint[i] /= total;
    out.marg_t = Tensor({ct});
    out.marg_s = Tensor({cs});
    for (std::size_t i = 0; i < ct; ++i)
        for (std::size_t j = 0; j < cs; ++j) {
            out.marg_t[i] += out.joint.at(i, j);
            out.marg_s[j] += out.joint.at(i, j);
        }
    return out;
}

PmiMatrix pmi_matrix(const Joint& j, double floor) {
    std::size_t ct = j.joint.extent(0), cs = j.joint.extent(1);
    PmiMatrix out{Tensor({cs, ct}), floor};
    for (std::size_t t = 0; t < ct; ++t)
        for (std::size_t s = 0; s < cs; ++s) {
            double p = j.joint.at(t, s);
            double denom = j.marg_t[t] * j.marg_s[s];
            double v = (p <= 0.0 || denom <= 0.0) ? floor : std::log(p / denom);
            out.values.at(s, t) = std::max(v, floor);
        }
    return out;
}

Tensor soft_targets(const PmiMatrix& p) {
    Tensor out = p.values;
    double mx = 0.0;
    for (std::size_t i = 0; i < out.numel(); ++i) {
        out[i] = std::max(0.0, out[i]);
        mx = std::max(mx, out[i]);
    }
    if (mx > 0.0)
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] /= mx;
    return out;
}

Tensor soft_targets_from_semantics(const Tensor& source_sem, const Tensor& target_sem) {
    Joint j = joint_distribution(class_distributions(target_sem), class_distributions(source_sem));
    return soft_targets(pmi_matrix(j));
}

}  // namespace agzsl::pmi
