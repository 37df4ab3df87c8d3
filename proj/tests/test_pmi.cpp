#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "agzsl/pmi.hpp"
#include "agzsl/rng.hpp"

using namespace agzsl;
using num::Tensor;

namespace {

Tensor random_tensor(num::Rng& rng, std::vector<std::size_t> shape) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-2.0, 2.0);
    return t;
}

// Scalar brute-force pipeline: softmax rows, joint by explicit (i,j,k) loops,
// marginals, then the log ratio with the same floor.
Tensor oracle_pmi(const Tensor& src_sem, const Tensor& tgt_sem, double floor = -30.0) {
    auto softmax_rows = [](const Tensor& m) {
        Tensor out(m.shape());
        for (std::size_t i = 0; i < m.extent(0); ++i) {
            double mx = -1e300;
            for (std::size_t k = 0; k < m.extent(1); ++k) mx = std::max(mx, m.at(i, k));
            double z = 0.0;
            for (std::size_t k = 0; k < m.extent(1); ++k) z += std::exp(m.at(i, k) - mx);
            for (std::size_t k = 0; k < m.extent(1); ++k)
                out.at(i, k) = std::exp(m.at(i, k) - mx) / z;
        }
        return out;
    };
    Tensor zs = softmax_rows(src_sem), zt = softmax_rows(tgt_sem);
    std::size_t cs = zs.extent(0), ct = zt.extent(0), a = zs.extent(1);
    std::vector<std::vector<double>> j(ct, std::vector<double>(cs, 0.0));
    double total = 0.0;
    for (std::size_t ti = 0; ti < ct; ++ti)
        for (std::size_t si = 0; si < cs; ++si)
            for (std::size_t k = 0; k < a; ++k) {
                j[ti][si] += zt.at(ti, k) * zs.at(si, k);
            }
    for (std::size_t ti = 0; ti < ct; ++ti)
        for (std::size_t si = 0; si < cs; ++si) total += j[ti][si];
    std::vector<double> pt(ct, 0.0), ps(cs, 0.0);
    for (std::size_t ti = 0; ti < ct; ++ti)
        for (std::size_t si = 0; si < cs; ++si) {
            j[ti][si] /= total;
            pt[ti] += j[ti][si];
            ps[si] += j[ti][si];
        }
    Tensor out({cs, ct});
    for (std::size_t si = 0; si < cs; ++si)
        for (std::size_t ti = 0; ti < ct; ++ti) {
            double v = j[ti][si];
            out.at(si, ti) = v <= 0.0 ? floor : std::log(v / (pt[ti] * ps[si]));
        }
    return out;
}

}  // namespace

TEST_CASE("class distributions are row-stochastic and shift invariant") {
    num::Rng rng(3);
    Tensor sem = random_tensor(rng, {4, 6});
    Tensor z = pmi::class_distributions(sem);
    for (std::size_t i = 0; i < 4; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < 6; ++k) {
            CHECK(z.at(i, k) > 0);
            s += z.at(i, k);
        }
        CHECK(std::abs(s - 1.0) < 1e-12);
    }
    Tensor shifted = sem;
    for (std::size_t k = 0; k < 6; ++k) shifted.at(1, k) += 3.7;
    Tensor z2 = pmi::class_distributions(shifted);
    for (std::size_t k = 0; k < 6; ++k) CHECK(std::abs(z.at(1, k) - z2.at(1, k)) < 1e-12);

    Tensor uniform = Tensor::full({1, 5}, 0.3);
    Tensor zu = pmi::class_distributions(uniform);
    for (std::size_t k = 0; k < 5; ++k) CHECK(zu.at(0, k) == doctest::Approx(0.2));
}

TEST_CASE("joint normalization and degenerate case") {
    Tensor one = Tensor::full({1, 3}, 1.0 / 3);
    pmi::Joint j = pmi::joint_distribution(one, one);
    CHECK(j.joint.at(0, 0) == doctest::Approx(1.0));

    num::Rng rng(5);
    Tensor zs = pmi::class_distributions(random_tensor(rng, {4, 5}));
    Tensor zt = pmi::class_distributions(random_tensor(rng, {3, 5}));
    pmi::Joint jj = pmi::joint_distribution(zt, zs);
    double total = 0.0, mt = 0.0, ms = 0.0;
    for (std::size_t i = 0; i < jj.joint.numel(); ++i) total += jj.joint[i];
    for (std::size_t i = 0; i < 3; ++i) mt += jj.marg_t[i];
    for (std::size_t i = 0; i < 4; ++i) ms += jj.marg_s[i];
    CHECK(std::abs(total - 1.0) < 1e-12);
    CHECK(std::abs(mt - 1.0) < 1e-12);
    CHECK(std::abs(ms - 1.0) < 1e-12);
}

TEST_CASE("orthogonal two-class case: diagonal log 2, off-diagonal floored") {
    Tensor zt({2, 2}, {1.0, 0.0, 0.0, 1.0});
    Tensor zs = zt;
    pmi::Joint j = pmi::joint_distribution(zt, zs);
    CHECK(j.joint.at(0, 0) == doctest::Approx(0.5));
    CHECK(j.joint.at(0, 1) == doctest::Approx(0.0));
    CHECK(j.joint.at(1, 0) == doctest::Approx(0.0));
    CHECK(j.joint.at(1, 1) == doctest::Approx(0.5));
    pmi::PmiMatrix p = pmi::pmi_matrix(j);
    CHECK(p.values.at(0, 0) == doctest::Approx(std::log(2.0)));
    CHECK(p.values.at(1, 1) == doctest::Approx(std::log(2.0)));
    CHECK(p.values.at(0, 1) == doctest::Approx(-30.0));
    CHECK(p.values.at(1, 0) == doctest::Approx(-30.0));
}

TEST_CASE("independent joint gives zero pmi everywhere") {
    Tensor pt({2}, {0.3, 0.7});
    Tensor ps({3}, {0.2, 0.5, 0.3});
    pmi::Joint j;
    j.joint = Tensor({2, 3});
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t k = 0; k < 3; ++k) j.joint.at(i, k) = pt[i] * ps[k];
    j.marg_t = pt;
    j.marg_s = ps;
    pmi::PmiMatrix p = pmi::pmi_matrix(j);
    for (std::size_t i = 0; i < p.values.numel(); ++i) CHECK(std::abs(p.values[i]) < 1e-12);
}

TEST_CASE("pipeline matches the scalar oracle on all sizes up to 5x5") {
    num::Rng rng(17);
    for (std::size_t cs = 1; cs <= 5; ++cs) {
        for (std::size_t ct = 1; ct <= 5; ++ct) {
            Tensor src = random_tensor(rng, {cs, 4});
            Tensor tgt = random_tensor(rng, {ct, 4});
            Tensor zs = pmi::class_distributions(src);
            Tensor zt = pmi::class_distributions(tgt);
            pmi::PmiMatrix p = pmi::pmi_matrix(pmi::joint_distribution(zt, zs));
            Tensor want = oracle_pmi(src, tgt);
            REQUIRE(p.values.shape() == want.shape());
            for (std::size_t i = 0; i < want.numel(); ++i)
                CHECK(std::abs(p.values[i] - want[i]) < 1e-12);
        }
    }
}

TEST_CASE("role exchange transposes the pmi matrix") {
    num::Rng rng(19);
    Tensor src = random_tensor(rng, {4, 6});
    Tensor tgt = random_tensor(rng, {3, 6});
    Tensor zs = pmi::class_distributions(src);
    Tensor zt = pmi::class_distributions(tgt);
    pmi::PmiMatrix fwd = pmi::pmi_matrix(pmi::joint_distribution(zt, zs));   // Cs x Ct
    pmi::PmiMatrix rev = pmi::pmi_matrix(pmi::joint_distribution(zs, zt));   // Ct x Cs
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(std::abs(fwd.values.at(i, j) - rev.values.at(j, i)) < 1e-12);
}

TEST_CASE("soft targets: range, scaling and monotonicity") {
    num::Rng rng(23);
    Tensor src = random_tensor(rng, {5, 8});
    Tensor tgt = random_tensor(rng, {4, 8});
    Tensor t = pmi::soft_targets_from_semantics(src, tgt);
    pmi::PmiMatrix p =
        pmi::pmi_matrix(pmi::joint_distribution(pmi::class_distributions(tgt),
                                                pmi::class_distributions(src)));
    double max_pmi = 0.0, max_target = 0.0;
    for (std::size_t i = 0; i < p.values.numel(); ++i) {
        CHECK(t[i] >= 0.0);
        CHECK(t[i] <= 1.0);
        max_pmi = std::max(max_pmi, p.values[i]);
        max_target = std::max(max_target, t[i]);
    }
    if (max_pmi > 0) CHECK(max_target == doctest::Approx(1.0));
    for (std::size_t i = 0; i < p.values.numel(); ++i)
        for (std::size_t j = 0; j < p.values.numel(); ++j)
            if (p.values[i] > p.values[j] && p.values[j] > 0) CHECK(t[i] > t[j]);
}

TEST_CASE("all-negative pmi maps to all-zero targets") {
    pmi::PmiMatrix p;
    p.values = Tensor({2, 2}, {-1.0, -0.5, -2.0, -0.1});
    p.floor = -30.0;
    Tensor t = pmi::soft_targets(p);
    for (std::size_t i = 0; i < 4; ++i) CHECK(t[i] == 0.0);
}
