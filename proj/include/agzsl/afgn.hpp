#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "agzsl/agan.hpp"
#include "agzsl/datamodel.hpp"
#include "agzsl/graph.hpp"
#include "agzsl/rng.hpp"

namespace agzsl::afgn {

struct AfgnConfig {
    std::size_t z = 16;          // noise dimension
    std::size_t g_hidden = 0;    // 0 -> 2m
    double lambda_gp = 10.0;
    double lambda_cls = 0.1;
    double lambda_m2 = 0.2;
    std::size_t n_critic = 5;
    std::size_t per_class = 400;  // synthesized features per class
    bool use_cls = true;          // ablation switch for the classifier term
    bool use_m2 = true;           // ablation switch for the mutual loss
};

// Conditional generator (one hidden layer) and linear critic.
struct AfgnModel {
    AfgnConfig cfg;
    std::size_t m = 0, A = 0;

    num::Tensor g_w1, g_b1, g_w2, g_b2;  // vector-layer weights, out x in
    num::Tensor d_wx, d_wa, d_b;         // critic: D(x,a) = wx.x + wa.a + b

    std::size_t g_hidden() const { return cfg.g_hidden ? cfg.g_hidden : 2 * m; }

    static AfgnModel init(std::size_t m, std::size_t A, const AfgnConfig& cfg, num::Rng& rng);

    std::vector<std::pair<std::string, num::Tensor*>> named_params();
    std::vector<num::Tensor*> generator_params();
    std::vector<num::Tensor*> critic_params();
};

// x~ = G(eps || a) as a tape node (eps and a are constants).
num::Var generate(num::Tape& tape, AfgnModel& model, const num::Tensor& eps,
                  const num::Tensor& a);

// Plain eval-mode generation.
num::Tensor generate_value(AfgnModel& model, const num::Tensor& eps, const num::Tensor& a);

// lambda_gp * (||wx|| - 1)^2. The critic is linear in x, so the interpolate
// gradient is the constant wx and the penalty has this closed form; no
// differentiation through gradients is needed.
num::Var gradient_penalty(num::Tape& tape, AfgnModel& model);

// Critic objective as a minimization: E[D(x~,a)] - E[D(fs,a)] + GP.
// fs and x~ are batch constants.
struct CriticLoss {
    double wasserstein = 0, penalty = 0, total = 0;
    num::Var total_var;
};
CriticLoss critic_loss(num::Tape& tape, AfgnModel& model,
                       const std::vector<num::Tensor>& fs_batch,
                       const std::vector<num::Tensor>& xt_batch,
                       const std::vector<num::Tensor>& a_batch);

// Generator objective: -E[D(x~,a)] + lambda_cls * L_cls + lambda_m2 * L_m2,
// with the critic and classifier h_2 frozen and fs a batch constant.
struct GenLoss {
    double adv = 0, cls = 0, m2 = 0, total = 0;
    num::Var total_var;
};
GenLoss generator_loss(num::Tape& tape, AfgnModel& model, agan::AganModel& h2_owner,
                       const std::vector<num::Tensor>& fs_batch,
                       const std::vector<num::Tensor>& a_batch,
                       const std::vector<num::Tensor>& eps_batch,
                       const std::vector<std::int32_t>& labels);

// per_class features for every source and target class, conditioned on each
// class's semantic vector; deterministic for a fixed rng state.
struct SynthSet {
    std::vector<num::Tensor> features;   // each length m
    std::vector<std::int32_t> labels;    // 1-based
};
SynthSet synthesize_features(AfgnModel& model, const data::ClassSemantics& sem,
                             std::size_t per_class, num::Rng& rng);

enum class DownstreamMode { Gzsl, Zsl };

struct DownstreamConfig {
    double lr = 1e-2;
    std::size_t max_steps = 2000;
    double plateau_rel = 1e-5;
    std::size_t plateau_window = 20;
};

// Affine softmax classifier fit on a synthetic set by full-batch Adam until
// the loss plateaus. ZSL mode keeps only target-class samples and emits
// C_t outputs.
struct Downstream {
    DownstreamMode mode = DownstreamMode::Gzsl;
    std::size_t c_source = 0, c_target = 0;
    num::Tensor w;  // outputs x m
    num::Tensor b;

    std::size_t outputs() const { return w.extent(0); }
    // Logits of one embedding.
    std::vector<double> scores(const num::Tensor& x) const;
};

Downstream fit_downstream(const SynthSet& set, DownstreamMode mode,
                          std::size_t c_source, std::size_t c_target, std::size_t m,
                          const DownstreamConfig& cfg = {});

}  // namespace agzsl::afgn
