#include "agzsl/agan.hpp"

#include <cmath>

namespace agzsl::agan {

using num::Tape;
using num::Tensor;
using num::Var;

namespace {

Tensor uniform_init(num::Rng& rng, std::vector<std::size_t> shape, std::size_t fan_in) {
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-bound, bound);
    return t;
}

}  // namespace

AganModel AganModel::init(std::size_t r, std::size_t d, std::size_t A, std::size_t g,
                          std::size_t c_source, std::size_t c_target,
                          const AganConfig& cfg, num::Rng& rng) {
    AganModel m;
    m.cfg = cfg;
    m.r = r; m.d = d; m.A = A; m.g = g;
    m.c_source = c_source; m.c_target = c_target;
    std::size_t mh = m.mi_hidden(), qh = m.q_hidden(), ah = m.attn_hidden(), ch = m.cls_hidden();
    std::size_t dim = cfg.m;
    std::size_t classes = c_source + c_target;

    m.mi_w1 = uniform_init(rng, {d, mh}, d);
    m.mi_b1 = uniform_init(rng, {mh}, d);
    m.mi_wmu = uniform_init(rng, {mh, dim}, mh);
    m.mi_bmu = uniform_init(rng, {dim}, mh);
    m.mi_wlv = uniform_init(rng, {mh, dim}, mh);
    m.mi_blv = uniform_init(rng, {dim}, mh);
    m.q_w1 = uniform_init(rng, {g, qh}, g);
    m.q_b1 = uniform_init(rng, {qh}, g);
    m.q_w2 = uniform_init(rng, {qh, dim}, qh);
    m.q_b2 = uniform_init(rng, {dim}, qh);
    m.k_wb = uniform_init(rng, {A, ah}, A);
    m.k_wa = uniform_init(rng, {ah}, ah);
    m.t_wa = uniform_init(rng, {r, A, ah}, A);
    m.t_wb = uniform_init(rng, {r, ah, A}, ah);
    m.kt_wb = uniform_init(rng, {A, ah}, A);
    m.kt_wa = uniform_init(rng, {ah}, ah);
    m.h2_w1 = uniform_init(rng, {ch, dim}, dim);
    m.h2_b1 = uniform_init(rng, {ch}, dim);
    m.h2_w2 = uniform_init(rng, {classes, ch}, ch);
    m.h2_b2 = uniform_init(rng, {classes}, ch);
    return m;
}

std::vector<std::pair<std::string, Tensor*>> AganModel::named_params() {
    return {
        {"agan.mi_w1", &mi_w1},   {"agan.mi_b1", &mi_b1},
        {"agan.mi_wmu", &mi_wmu}, {"agan.mi_bmu", &mi_bmu},
        {"agan.mi_wlv", &mi_wlv}, {"agan.mi_blv", &mi_blv},
        {"agan.q_w1", &q_w1},     {"agan.q_b1", &q_b1},
        {"agan.q_w2", &q_w2},     {"agan.q_b2", &q_b2},
        {"agan.k_wb", &k_wb},     {"agan.k_wa", &k_wa},
        {"agan.t_wa", &t_wa},     {"agan.t_wb", &t_wb},
        {"agan.kt_wb", &kt_wb},   {"agan.kt_wa", &kt_wa},
        {"agan.h2_w1", &h2_w1},   {"agan.h2_b1", &h2_b1},
        {"agan.h2_w2", &h2_w2},   {"agan.h2_b2", &h2_b2},
    };
}

std::vector<Tensor*> AganModel::params() {
    std::vector<Tensor*> out;
    for (auto& [name, p] : named_params()) out.push_back(p);
    return out;
}

Var attribute_projection(Tape& tape, AganModel& model, const Tensor& attr_sem) {
    Var v = tape.constant(attr_sem);
    Var h = tape.relu_(tape.add_rowvec(tape.matmul(v, tape.param(model.q_w1)),
                                       tape.param(model.q_b1)));
    return tape.add_rowvec(tape.matmul(h, tape.param(model.q_w2)), tape.param(model.q_b2));
}

SampleTrace embed(Tape& tape, AganModel& model, const Tensor& raw,
                  Var v_prime, const Tensor& a, const Tensor* eps) {
    SampleTrace tr;
    Var x = tape.constant(raw);
    Var h = tape.relu_(tape.add_rowvec(tape.matmul(x, tape.param(model.mi_w1)),
                                       tape.param(model.mi_b1)));
    Var mu = tape.add_rowvec(tape.matmul(h, tape.param(model.mi_wmu)), tape.param(model.mi_bmu));
    Var lv = tape.add_rowvec(tape.matmul(h, tape.param(model.mi_wlv)), tape.param(model.mi_blv));

    // per-dimension KL(N(mu, sigma^2) || N(0, 1)), averaged over regions and
    // bounded dimensions
    Var inner = tape.sub(tape.add(tape.mul(mu, mu), tape.exp_(lv)),
                         tape.add(lv, tape.constant(1.0)));
    tr.kl = tape.scale(tape.sum_all(inner),
                       0.5 / static_cast<double>(model.r * model.cfg.m));

    if (eps) {
        Var sigma = tape.exp_(tape.scale(lv, 0.5));
        tr.f_bound = tape.add(mu, tape.mul(sigma, tape.constant(*eps)));
    } else {
        tr.f_bound = mu;
    }

    tr.fv = tape.matmul_nt(tr.f_bound, v_prime);
    Var k_score = tape.matvec(tape.tanh_(tape.matmul(tr.fv, tape.param(model.k_wb))),
                              tape.param(model.k_wa));
    tr.pi = tape.softmax(k_score);
    tr.t = tape.softmax(tape.grouped_two_layer(tr.fv, tape.param(model.t_wa),
                                               tape.param(model.t_wb)), 1);
    tr.h_t = tape.max_last(tr.t);
    tr.alpha = tape.scale(tape.mul(tr.pi, tr.h_t), model.cfg.lambda_alpha);
    tr.f1 = tape.add(tr.f_bound, tape.scale_rows(tr.f_bound, tr.alpha));

    if (model.cfg.one_step_attention) {
        tr.fs = tape.mean_axis(tr.f1, 0);
        return tr;
    }

    tr.fv2 = tape.matmul_nt(tr.f1, v_prime);
    tr.fvw = tape.scale_cols(tr.fv2, tape.constant(a));
    Var kt_score = tape.matvec(tape.tanh_(tape.matmul(tr.fvw, tape.param(model.kt_wb))),
                               tape.param(model.kt_wa));
    tr.alpha2 = tape.softmax(kt_score);
    tr.f2 = tape.add(tr.f1, tape.scale_rows(tr.f1, tr.alpha2));
    tr.fs = tape.mean_axis(tr.f2, 0);
    return tr;
}

Var logits(Tape& tape, AganModel& model, Var fs) {
    Var h = tape.relu_(tape.add(tape.matvec(tape.param(model.h2_w1), fs),
                                tape.param(model.h2_b1)));
    return tape.add(tape.matvec(tape.param(model.h2_w2), h), tape.param(model.h2_b2));
}

AganLosses losses(Tape& tape, AganModel& model, const AganLossInputs& in) {
    std::size_t ns = in.traces.size();
    std::size_t cs = model.c_source, ct = model.c_target;
    if (ns == 0 || in.logit_vars.size() != ns || in.labels.size() != ns)
        throw DimensionError("agan losses: inconsistent batch");

    Var ce_sum = tape.constant(0.0);
    Var lu_sum = tape.constant(0.0);
    Var lm1_sum = tape.constant(0.0);
    Var kl_sum = tape.constant(0.0);
    for (std::size_t i = 0; i < ns; ++i) {
        std::int32_t y = in.labels[i];
        if (y < 1 || static_cast<std::size_t>(y) > cs)
            throw DataError("training label " + std::to_string(y) + " outside source range");
        Var lg = in.logit_vars[i];
        Var src = tape.slice_vec(lg, 0, cs);
        Var ce = tape.sub(tape.logsumexp(src), tape.pick(src, static_cast<std::size_t>(y - 1)));
        ce_sum = tape.add(ce_sum, ce);

        if (in.soft_targets) {
            for (std::size_t j = 0; j < ct; ++j) {
                double p = in.soft_targets->at(static_cast<std::size_t>(y - 1), j);
                Var l = tape.pick(lg, cs + j);
                // soft-label binary cross-entropy: softplus(l) - p*l
                lu_sum = tape.add(lu_sum, tape.sub(tape.softplus_(l), tape.scale(l, p)));
            }
        }
        if (in.x_tilde) {
            Var diff = tape.sub(in.traces[i].fs, tape.constant((*in.x_tilde)[i]));
            lm1_sum = tape.add(lm1_sum, tape.scale(tape.outer_sq_norm(diff), 0.5));
        }
        kl_sum = tape.add(kl_sum, in.traces[i].kl);
    }
    double inv_ns = 1.0 / static_cast<double>(ns);
    Var ce = tape.scale(ce_sum, inv_ns);
    Var lu = tape.scale(lu_sum, inv_ns / static_cast<double>(ct));
    Var lm1 = tape.scale(lm1_sum, inv_ns);
    Var mean_kl = tape.scale(kl_sum, inv_ns);
    Var kl_term = tape.scale(
        tape.relu_(tape.sub(mean_kl, tape.constant(model.cfg.gamma))), model.cfg.beta_kl);

    Var total = tape.add(ce, kl_term);
    if (in.soft_targets) total = tape.add(total, tape.scale(lu, model.cfg.lambda_p));
    if (in.x_tilde) total = tape.add(total, tape.scale(lm1, model.cfg.lambda_m1));

    AganLosses out;
    out.ce = tape.val(ce).item();
    out.lu = in.soft_targets ? tape.val(lu).item() : 0.0;
    out.lm1 = in.x_tilde ? tape.val(lm1).item() : 0.0;
    out.mean_kl = tape.val(mean_kl).item();
    out.kl_term = tape.val(kl_term).item();
    out.total = tape.val(total).item();
    out.total_var = total;
    return out;
}

namespace {

// Shared eval-pass driver: stage one is candidate-independent, stage two is
// rebuilt per candidate class.
template <typename Fn>
void for_each_candidate(AganModel& model, const Tensor& raw,
                        const data::ClassSemantics& sem, const Tensor& attr_sem, Fn&& fn) {
    Tape tape;
    Var v_prime = attribute_projection(tape, model, attr_sem);
    std::size_t classes = model.classes();
    if (model.cfg.one_step_attention) {
        SampleTrace tr = embed(tape, model, raw, v_prime,
                               Tensor::zeros({model.A}), nullptr);
        Var lg = logits(tape, model, tr.fs);
        for (std::size_t c = 0; c < classes; ++c)
            fn(c, tape.val(tr.fs), tape.val(lg));
        return;
    }
    for (std::size_t c = 0; c < classes; ++c) {
        Tensor a = sem.of_class(static_cast<std::int32_t>(c + 1));
        SampleTrace tr = embed(tape, model, raw, v_prime, a, nullptr);
        Var lg = logits(tape, model, tr.fs);
        fn(c, tape.val(tr.fs), tape.val(lg));
    }
}

}  // namespace

std::vector<double> score_candidates(AganModel& model, const Tensor& raw,
                                     const data::ClassSemantics& sem, const Tensor& attr_sem) {
    // Source and target slices are scored on a common probability scale:
    // softmax over the source slice for source candidates, per-index sigmoid
    // for target candidates. Raw logits are not comparable across the two
    // slices because only the source slice is softmax-normalized in training.
    std::size_t cs = sem.source_classes();
    std::vector<double> scores(model.classes());
    for_each_candidate(model, raw, sem, attr_sem,
                       [&](std::size_t c, const Tensor&, const Tensor& lg) {
                           if (c < cs) {
                               double mx = lg[0];
                               for (std::size_t k = 1; k < cs; ++k) mx = std::max(mx, lg[k]);
                               double z = 0.0;
                               for (std::size_t k = 0; k < cs; ++k) z += std::exp(lg[k] - mx);
                               scores[c] = std::exp(lg[c] - mx) / z;
                           } else {
                               scores[c] = 1.0 / (1.0 + std::exp(-lg[c]));
                           }
                       });
    return scores;
}

std::vector<Tensor> embed_candidates(AganModel& model, const Tensor& raw,
                                     const data::ClassSemantics& sem, const Tensor& attr_sem) {
    std::vector<Tensor> out(model.classes());
    for_each_candidate(model, raw, sem, attr_sem,
                       [&](std::size_t c, const Tensor& fs, const Tensor&) { out[c] = fs; });
    return out;
}

AttentionRecord attention_of(AganModel& model, const Tensor& raw,
                             const Tensor& a, const Tensor& attr_sem) {
    Tape tape;
    Var v_prime = attribute_projection(tape, model, attr_sem);
    SampleTrace tr = embed(tape, model, raw, v_prime, a, nullptr);
    AttentionRecord rec;
    rec.alpha = tape.val(tr.alpha).vec();
    rec.alpha2 = model.cfg.one_step_attention
                     ? std::vector<double>(model.r, 1.0 / static_cast<double>(model.r))
                     : tape.val(tr.alpha2).vec();
    rec.dom_attr = tape.argmax_of(tr.h_t);
    rec.h_t = tape.val(tr.h_t).vec();
    return rec;
}

Tensor embed_value(AganModel& model, const Tensor& raw, const Tensor& a, const Tensor& attr_sem) {
    Tape tape;
    Var v_prime = attribute_projection(tape, model, attr_sem);
    SampleTrace tr = embed(tape, model, raw, v_prime, a, nullptr);
    return tape.val(tr.fs);
}

}  // namespace agzsl::agan
