#include "agzsl/afgn.hpp"

#include <cmath>

#include "agzsl/adam.hpp"

namespace agzsl::afgn {

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

AfgnModel AfgnModel::init(std::size_t m, std::size_t A, const AfgnConfig& cfg, num::Rng& rng) {
    AfgnModel out;
    out.cfg = cfg;
    out.m = m;
    out.A = A;
    std::size_t in = cfg.z + A, gh = out.g_hidden();
    out.g_w1 = uniform_init(rng, {gh, in}, in);
    out.g_b1 = uniform_init(rng, {gh}, in);
    out.g_w2 = uniform_init(rng, {m, gh}, gh);
    out.g_b2 = uniform_init(rng, {m}, gh);
    out.d_wx = uniform_init(rng, {m}, m + A);
    out.d_wa = uniform_init(rng, {A}, m + A);
    out.d_b = uniform_init(rng, {}, m + A);
    return out;
}

std::vector<std::pair<std::string, Tensor*>> AfgnModel::named_params() {
    return {
        {"afgn.g_w1", &g_w1}, {"afgn.g_b1", &g_b1},
        {"afgn.g_w2", &g_w2}, {"afgn.g_b2", &g_b2},
        {"afgn.d_wx", &d_wx}, {"afgn.d_wa", &d_wa}, {"afgn.d_b", &d_b},
    };
}

std::vector<Tensor*> AfgnModel::generator_params() { return {&g_w1, &g_b1, &g_w2, &g_b2}; }
std::vector<Tensor*> AfgnModel::critic_params() { return {&d_wx, &d_wa, &d_b}; }

Var generate(Tape& tape, AfgnModel& model, const Tensor& eps, const Tensor& a) {
    Var in = tape.concat_vec(tape.constant(eps), tape.constant(a));
    Var h = tape.relu_(tape.add(tape.matvec(tape.param(model.g_w1), in),
                                tape.param(model.g_b1)));
    return tape.add(tape.matvec(tape.param(model.g_w2), h), tape.param(model.g_b2));
}

Tensor generate_value(AfgnModel& model, const Tensor& eps, const Tensor& a) {
    Tape tape;
    return tape.val(generate(tape, model, eps, a));
}

Var gradient_penalty(Tape& tape, AfgnModel& model) {
    Var norm = tape.sqrt_(tape.outer_sq_norm(tape.param(model.d_wx)));
    Var excess = tape.sub(norm, tape.constant(1.0));
    return tape.scale(tape.mul(excess, excess), model.cfg.lambda_gp);
}

namespace {

// D(x, a) with the critic parameters either live or frozen.
Var critic_apply(Tape& tape, Var wx, Var wa, Var b, Var x, Var a) {
    return tape.add(tape.add(tape.dot(wx, x), tape.dot(wa, a)), b);
}

}  // namespace

CriticLoss critic_loss(Tape& tape, AfgnModel& model,
                       const std::vector<Tensor>& fs_batch,
                       const std::vector<Tensor>& xt_batch,
                       const std::vector<Tensor>& a_batch) {
    std::size_t ns = fs_batch.size();
    if (ns == 0 || xt_batch.size() != ns || a_batch.size() != ns)
        throw DimensionError("critic loss: inconsistent batch");
    Var wx = tape.param(model.d_wx);
    Var wa = tape.param(model.d_wa);
    Var b = tape.param(model.d_b);
    Var acc = tape.constant(0.0);
    for (std::size_t i = 0; i < ns; ++i) {
        Var a = tape.constant(a_batch[i]);
        Var fake = critic_apply(tape, wx, wa, b, tape.constant(xt_batch[i]), a);
        Var real = critic_apply(tape, wx, wa, b, tape.constant(fs_batch[i]), a);
        acc = tape.add(acc, tape.sub(fake, real));
    }
    Var wasserstein = tape.scale(acc, 1.0 / static_cast<double>(ns));
    Var gp = gradient_penalty(tape, model);
    Var total = tape.add(wasserstein, gp);
    CriticLoss out;
    out.wasserstein = tape.val(wasserstein).item();
    out.penalty = tape.val(gp).item();
    out.total = tape.val(total).item();
    out.total_var = total;
    return out;
}

GenLoss generator_loss(Tape& tape, AfgnModel& model, agan::AganModel& h2_owner,
                       const std::vector<Tensor>& fs_batch,
                       const std::vector<Tensor>& a_batch,
                       const std::vector<Tensor>& eps_batch,
                       const std::vector<std::int32_t>& labels) {
    std::size_t ns = fs_batch.size();
    if (ns == 0 || a_batch.size() != ns || eps_batch.size() != ns || labels.size() != ns)
        throw DimensionError("generator loss: inconsistent batch");
    std::size_t cs = h2_owner.c_source;

    // frozen critic and classifier
    Var wx = tape.constant(model.d_wx);
    Var wa = tape.constant(model.d_wa);
    Var db = tape.constant(model.d_b);
    Var h2_w1 = tape.constant(h2_owner.h2_w1);
    Var h2_b1 = tape.constant(h2_owner.h2_b1);
    Var h2_w2 = tape.constant(h2_owner.h2_w2);
    Var h2_b2 = tape.constant(h2_owner.h2_b2);

    Var adv_sum = tape.constant(0.0);
    Var cls_sum = tape.constant(0.0);
    Var m2_sum = tape.constant(0.0);
    for (std::size_t i = 0; i < ns; ++i) {
        std::int32_t y = labels[i];
        if (y < 1 || static_cast<std::size_t>(y) > cs)
            throw DataError("generator loss: label " + std::to_string(y) + " outside source range");
        Var xt = generate(tape, model, eps_batch[i], a_batch[i]);
        Var a = tape.constant(a_batch[i]);
        adv_sum = tape.add(adv_sum, critic_apply(tape, wx, wa, db, xt, a));
        if (model.cfg.use_cls) {
            Var h = tape.relu_(tape.add(tape.matvec(h2_w1, xt), h2_b1));
            Var lg = tape.add(tape.matvec(h2_w2, h), h2_b2);
            Var src = tape.slice_vec(lg, 0, cs);
            cls_sum = tape.add(cls_sum, tape.sub(tape.logsumexp(src),
                                                 tape.pick(src, static_cast<std::size_t>(y - 1))));
        }
        if (model.cfg.use_m2) {
            Var diff = tape.sub(xt, tape.constant(fs_batch[i]));
            m2_sum = tape.add(m2_sum, tape.scale(tape.outer_sq_norm(diff), 0.5));
        }
    }
    double inv_ns = 1.0 / static_cast<double>(ns);
    Var adv = tape.scale(adv_sum, -inv_ns);
    Var total = adv;
    GenLoss out;
    out.adv = tape.val(adv).item();
    if (model.cfg.use_cls) {
        Var cls = tape.scale(cls_sum, inv_ns);
        out.cls = tape.val(cls).item();
        total = tape.add(total, tape.scale(cls, model.cfg.lambda_cls));
    }
    if (model.cfg.use_m2) {
        Var m2 = tape.scale(m2_sum, inv_ns);
        out.m2 = tape.val(m2).item();
        total = tape.add(total, tape.scale(m2, model.cfg.lambda_m2));
    }
    out.total = tape.val(total).item();
    out.total_var = total;
    return out;
}

SynthSet synthesize_features(AfgnModel& model, const data::ClassSemantics& sem,
                             std::size_t per_class, num::Rng& rng) {
    SynthSet out;
    std::size_t classes = sem.source_classes() + sem.target_classes();
    out.features.reserve(classes * per_class);
    out.labels.reserve(classes * per_class);
    for (std::size_t c = 1; c <= classes; ++c) {
        Tensor a = sem.of_class(static_cast<std::int32_t>(c));
        for (std::size_t i = 0; i < per_class; ++i) {
            Tensor eps = rng.gaussian_tensor({model.cfg.z});
            out.features.push_back(generate_value(model, eps, a));
            out.labels.push_back(static_cast<std::int32_t>(c));
        }
    }
    return out;
}

std::vector<double> Downstream::scores(const Tensor& x) const {
    std::size_t n_out = outputs(), m = w.extent(1);
    std::vector<double> s(n_out);
    for (std::size_t o = 0; o < n_out; ++o) {
        double v = b[o];
        for (std::size_t j = 0; j < m; ++j) v += w.at(o, j) * x[j];
        s[o] = v;
    }
    return s;
}

Downstream fit_downstream(const SynthSet& set, DownstreamMode mode,
                          std::size_t c_source, std::size_t c_target, std::size_t m,
                          const DownstreamConfig& cfg) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < set.labels.size(); ++i) {
        if (mode == DownstreamMode::Gzsl ||
            static_cast<std::size_t>(set.labels[i]) > c_source)
            keep.push_back(i);
    }
    if (keep.empty()) throw DataError("fit_downstream: empty training set");
    std::size_t n_out = mode == DownstreamMode::Gzsl ? c_source + c_target : c_target;

    std::vector<std::size_t> counts(n_out, 0);
    std::vector<std::size_t> targets(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        std::int32_t y = set.labels[keep[i]];
        std::size_t o = mode == DownstreamMode::Gzsl
                            ? static_cast<std::size_t>(y - 1)
                            : static_cast<std::size_t>(y) - c_source - 1;
        targets[i] = o;
        ++counts[o];
    }
    for (std::size_t o = 0; o < n_out; ++o)
        if (counts[o] == 0) throw DataError("fit_downstream: class with no synthetic samples");

    Downstream h;
    h.mode = mode;
    h.c_source = c_source;
    h.c_target = c_target;
    h.w = Tensor::zeros({n_out, m});
    h.b = Tensor::zeros({n_out});

    num::AdamConfig acfg;
    acfg.lr = cfg.lr;
    std::vector<Tensor*> params{&h.w, &h.b};
    num::Adam adam(acfg, params);

    std::vector<double> history;
    double inv_n = 1.0 / static_cast<double>(keep.size());
    for (std::size_t step = 0; step < cfg.max_steps; ++step) {
        Tensor gw = Tensor::zeros({n_out, m});
        Tensor gb = Tensor::zeros({n_out});
        double loss = 0.0;
        std::vector<double> logit(n_out);
        for (std::size_t i = 0; i < keep.size(); ++i) {
            const Tensor& x = set.features[keep[i]];
            double mx = -1e300;
            for (std::size_t o = 0; o < n_out; ++o) {
                double v = h.b[o];
                for (std::size_t j = 0; j < m; ++j) v += h.w.at(o, j) * x[j];
                logit[o] = v;
                mx = std::max(mx, v);
            }
            double z = 0.0;
            for (std::size_t o = 0; o < n_out; ++o) z += std::exp(logit[o] - mx);
            loss += (std::log(z) + mx - logit[targets[i]]) * inv_n;
            for (std::size_t o = 0; o < n_out; ++o) {
                double p = std::exp(logit[o] - mx) / z;
                double g = (p - (o == targets[i] ? 1.0 : 0.0)) * inv_n;
                gb[o] += g;
                for (std::size_t j = 0; j < m; ++j) gw.at(o, j) += g * x[j];
            }
        }
        adam.step(params, {gw, gb});
        history.push_back(loss);
        if (history.size() > cfg.plateau_window) {
            double prev = history[history.size() - 1 - cfg.plateau_window];
            if (std::abs(prev - loss) / std::max(1.0, std::abs(prev)) < cfg.plateau_rel) break;
        }
    }
    return h;
}

}  // namespace agzsl::afgn
