#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "agzsl/datamodel.hpp"
#include "agzsl/graph.hpp"
#include "agzsl/rng.hpp"
#include "agzsl/tensor.hpp"

namespace agzsl::agan {

struct AganConfig {
    std::size_t m = 32;           // bounded region dimension
    std::size_t mi_hidden = 0;    // 0 -> d
    std::size_t q_hidden = 0;     // 0 -> 2g
    std::size_t attn_hidden = 0;  // 0 -> A (K, per-region nets, second-level net)
    std::size_t cls_hidden = 0;   // 0 -> 2m
    double lambda_alpha = 10.0;
    double lambda_p = 0.2;
    double lambda_m1 = 0.1;
    double gamma = 0.05;          // MI bound
    double beta_kl = 10.0;        // hinge penalty weight
    bool one_step_attention = false;  // ablation: stop after the first level
};

// All learnable parameters of the embedding network.
struct AganModel {
    AganConfig cfg;
    std::size_t r = 0, d = 0, A = 0, g = 0, c_source = 0, c_target = 0;

    // region encoder: one rectified hidden layer, mean / log-variance heads
    num::Tensor mi_w1, mi_b1, mi_wmu, mi_bmu, mi_wlv, mi_blv;
    // attribute projector, one rectified hidden layer (g -> m)
    num::Tensor q_w1, q_b1, q_w2, q_b2;
    // first-level region attention
    num::Tensor k_wb, k_wa;      // A x h, h
    // per-region attribute attention, grouped with no weight sharing
    num::Tensor t_wa, t_wb;      // r x A x h, r x h x A
    // second-level region attention
    num::Tensor kt_wb, kt_wa;
    // classifier: one rectified hidden layer, C_s + C_t logits
    num::Tensor h2_w1, h2_b1, h2_w2, h2_b2;  // vector-layer weights are out x in

    std::size_t classes() const { return c_source + c_target; }
    std::size_t mi_hidden() const { return cfg.mi_hidden ? cfg.mi_hidden : d; }
    std::size_t q_hidden() const { return cfg.q_hidden ? cfg.q_hidden : 2 * g; }
    std::size_t attn_hidden() const { return cfg.attn_hidden ? cfg.attn_hidden : A; }
    std::size_t cls_hidden() const { return cfg.cls_hidden ? cfg.cls_hidden : 2 * cfg.m; }

    static AganModel init(std::size_t r, std::size_t d, std::size_t A, std::size_t g,
                          std::size_t c_source, std::size_t c_target,
                          const AganConfig& cfg, num::Rng& rng);

    std::vector<std::pair<std::string, num::Tensor*>> named_params();
    std::vector<num::Tensor*> params();
};

// Intermediate quantities of one sample's forward pass, as tape nodes.
struct SampleTrace {
    num::Var f_bound;  // r x m bounded region features
    num::Var kl;       // scalar, mean region KL to the standard normal
    num::Var fv;       // r x A region-attribute relevance
    num::Var pi;       // r first-level region attention
    num::Var t;        // r x A per-region attribute attention
    num::Var h_t;      // r strongest attribute probability per region
    num::Var alpha;    // r combined first-level attention
    num::Var f1;       // r x m
    num::Var fv2;      // r x A (invalid in one-step mode)
    num::Var fvw;      // r x A class-score weighted
    num::Var alpha2;   // r second-level attention
    num::Var f2;       // r x m
    num::Var fs;       // m final embedding
};

// Projected attribute matrix V' (A x m).
num::Var attribute_projection(num::Tape& tape, AganModel& model, const num::Tensor& attr_sem);

// Full two-step embedding of one sample. eps != nullptr selects the
// reparameterized training path (eps is an r x m standard-normal draw);
// eps == nullptr is the deterministic eval path. `a` is the conditioning
// class semantic vector.
SampleTrace embed(num::Tape& tape, AganModel& model, const num::Tensor& raw,
                  num::Var v_prime, const num::Tensor& a, const num::Tensor* eps);

// Classifier logits (width C_s + C_t) for an embedding node.
num::Var logits(num::Tape& tape, AganModel& model, num::Var fs);

struct AganLossInputs {
    std::vector<SampleTrace> traces;
    std::vector<num::Var> logit_vars;
    std::vector<std::int32_t> labels;            // 1-based source labels
    const num::Tensor* soft_targets = nullptr;   // Cs x Ct; null disables L_u
    const std::vector<num::Tensor>* x_tilde = nullptr;  // per-sample m; null disables L_m1
};

struct AganLosses {
    double ce = 0, lu = 0, lm1 = 0, kl_term = 0, mean_kl = 0, total = 0;
    num::Var total_var;
};

// Cross-entropy over the source softmax slice, one-vs-rest soft-label loss
// over the target indices, mutual loss against the generator output, and the
// hinged KL constraint.
AganLosses losses(num::Tape& tape, AganModel& model, const AganLossInputs& in);

// Eval-mode candidate-conditioned scoring: entry c comes from a forward pass
// conditioned on a_c; source entries are source-slice softmax probabilities,
// target entries per-index sigmoid probabilities, so the two slices share one
// scale. In one-step mode a single unconditioned pass supplies all scores.
std::vector<double> score_candidates(AganModel& model, const num::Tensor& raw,
                                     const data::ClassSemantics& sem,
                                     const num::Tensor& attr_sem);

// Eval-mode embedding per candidate class, for the downstream synthetic
// classifier.
std::vector<num::Tensor> embed_candidates(AganModel& model, const num::Tensor& raw,
                                          const data::ClassSemantics& sem,
                                          const num::Tensor& attr_sem);

// Attention values of one sample conditioned on a given class vector.
struct AttentionRecord {
    std::vector<double> alpha;           // r
    std::vector<double> alpha2;          // r
    std::vector<std::size_t> dom_attr;   // argmax attribute per region
    std::vector<double> h_t;             // its probability
};

AttentionRecord attention_of(AganModel& model, const num::Tensor& raw,
                             const num::Tensor& a, const num::Tensor& attr_sem);

// Deterministic eval-mode embedding conditioned on one class vector.
num::Tensor embed_value(AganModel& model, const num::Tensor& raw, const num::Tensor& a,
                        const num::Tensor& attr_sem);

}  // namespace agzsl::agan
