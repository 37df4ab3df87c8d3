#include "agzsl/trainer.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "agzsl/bundle.hpp"
#include "agzsl/pmi.hpp"

namespace agzsl::train {

using num::Tensor;

namespace {

constexpr std::uint64_t kSchedStreamBase = 1000;

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw DataError("config: bad boolean for " + key + ": " + v);
}

}  // namespace

TrainConfig TrainConfig::from_string(const std::string& text) {
    TrainConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw DataError("config line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        auto trim = [](std::string s) {
            std::size_t b = s.find_first_not_of(" \t\r");
            std::size_t e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw DataError("config line " + std::to_string(lineno) + ": empty key or value");
        try {
            if (key == "ns") cfg.ns = std::stoul(val);
            else if (key == "epochs") cfg.epochs = std::stoul(val);
            else if (key == "seed") cfg.seed = std::stoull(val);
            else if (key == "lr") cfg.lr = std::stod(val);
            else if (key == "beta1") cfg.beta1 = std::stod(val);
            else if (key == "beta2") cfg.beta2 = std::stod(val);
            else if (key == "m") cfg.agan.m = std::stoul(val);
            else if (key == "mi_hidden") cfg.agan.mi_hidden = std::stoul(val);
            else if (key == "q_hidden") cfg.agan.q_hidden = std::stoul(val);
            else if (key == "attn_hidden") cfg.agan.attn_hidden = std::stoul(val);
            else if (key == "cls_hidden") cfg.agan.cls_hidden = std::stoul(val);
            else if (key == "lambda_alpha") cfg.agan.lambda_alpha = std::stod(val);
            else if (key == "lambda_p") cfg.agan.lambda_p = std::stod(val);
            else if (key == "lambda_m1") cfg.agan.lambda_m1 = std::stod(val);
            else if (key == "gamma") cfg.agan.gamma = std::stod(val);
            else if (key == "beta_kl") cfg.agan.beta_kl = std::stod(val);
            else if (key == "z") cfg.afgn.z = std::stoul(val);
            else if (key == "g_hidden") cfg.afgn.g_hidden = std::stoul(val);
            else if (key == "lambda_gp") cfg.afgn.lambda_gp = std::stod(val);
            else if (key == "lambda_cls") cfg.afgn.lambda_cls = std::stod(val);
            else if (key == "lambda_m2") cfg.afgn.lambda_m2 = std::stod(val);
            else if (key == "n_critic") cfg.afgn.n_critic = std::stoul(val);
            else if (key == "features_per_class") cfg.afgn.per_class = std::stoul(val);
            else if (key == "disable_L_u") cfg.disable_L_u = parse_bool(val, key);
            else if (key == "one_step_attention_only") cfg.one_step_attention_only = parse_bool(val, key);
            else if (key == "disable_L_cls") cfg.disable_L_cls = parse_bool(val, key);
            else if (key == "disable_L_m1") cfg.disable_L_m1 = parse_bool(val, key);
            else if (key == "disable_L_m2") cfg.disable_L_m2 = parse_bool(val, key);
            else if (key == "downstream_lr") cfg.downstream.lr = std::stod(val);
            else if (key == "downstream_max_steps") cfg.downstream.max_steps = std::stoul(val);
            else throw DataError("config: unknown key " + key);
        } catch (const std::invalid_argument&) {
            throw DataError("config: bad value for " + key + ": " + val);
        } catch (const std::out_of_range&) {
            throw DataError("config: value out of range for " + key + ": " + val);
        }
    }
    return cfg;
}

TrainConfig TrainConfig::from_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config " + path.string());
    std::ostringstream os;
    os << f.rdbuf();
    return from_string(os.str());
}

std::string TrainConfig::canonical_text() const {
    std::ostringstream os;
    os << "ns = " << ns << "\n"
       << "epochs = " << epochs << "\n"
       << "seed = " << seed << "\n"
       << "lr = " << fmt_double(lr) << "\n"
       << "beta1 = " << fmt_double(beta1) << "\n"
       << "beta2 = " << fmt_double(beta2) << "\n"
       << "m = " << agan.m << "\n"
       << "mi_hidden = " << agan.mi_hidden << "\n"
       << "q_hidden = " << agan.q_hidden << "\n"
       << "attn_hidden = " << agan.attn_hidden << "\n"
       << "cls_hidden = " << agan.cls_hidden << "\n"
       << "lambda_alpha = " << fmt_double(agan.lambda_alpha) << "\n"
       << "lambda_p = " << fmt_double(agan.lambda_p) << "\n"
       << "lambda_m1 = " << fmt_double(agan.lambda_m1) << "\n"
       << "gamma = " << fmt_double(agan.gamma) << "\n"
       << "beta_kl = " << fmt_double(agan.beta_kl) << "\n"
       << "z = " << afgn.z << "\n"
       << "g_hidden = " << afgn.g_hidden << "\n"
       << "lambda_gp = " << fmt_double(afgn.lambda_gp) << "\n"
       << "lambda_cls = " << fmt_double(afgn.lambda_cls) << "\n"
       << "lambda_m2 = " << fmt_double(afgn.lambda_m2) << "\n"
       << "n_critic = " << afgn.n_critic << "\n"
       << "features_per_class = " << afgn.per_class << "\n"
       << "disable_L_u = " << (disable_L_u ? "true" : "false") << "\n"
       << "one_step_attention_only = " << (one_step_attention_only ? "true" : "false") << "\n"
       << "disable_L_cls = " << (disable_L_cls ? "true" : "false") << "\n"
       << "disable_L_m1 = " << (disable_L_m1 ? "true" : "false") << "\n"
       << "disable_L_m2 = " << (disable_L_m2 ? "true" : "false") << "\n"
       << "downstream_lr = " << fmt_double(downstream.lr) << "\n"
       << "downstream_max_steps = " << downstream.max_steps << "\n";
    return os.str();
}

std::uint64_t TrainConfig::hash() const {
    // FNV-1a over the canonical text
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : canonical_text()) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

Trainer::Trainer(TrainConfig cfg, const data::Dataset& ds)
    : cfg_(std::move(cfg)), ds_(ds), rng_(cfg_.seed, 1) {
    auto violations = data::validate(ds_);
    if (!violations.empty()) throw DataError("invalid dataset: " + violations.front());
    if (cfg_.ns < 1) throw DataError("batch size must be >= 1");

    cfg_.agan.one_step_attention = cfg_.one_step_attention_only;
    cfg_.afgn.use_cls = !cfg_.disable_L_cls;
    cfg_.afgn.use_m2 = !cfg_.disable_L_m2;

    std::size_t cs = ds_.class_sem.source_classes();
    std::size_t ct = ds_.class_sem.target_classes();
    num::Rng init_rng(cfg_.seed, 0);
    agan_ = agan::AganModel::init(ds_.bundle.regions(), ds_.bundle.dim(),
                                  ds_.class_sem.attributes(), ds_.attr_sem.vectors.extent(1),
                                  cs, ct, cfg_.agan, init_rng);
    afgn_ = afgn::AfgnModel::init(cfg_.agan.m, ds_.class_sem.attributes(), cfg_.afgn, init_rng);

    num::AdamConfig acfg{cfg_.lr, cfg_.beta1, cfg_.beta2, 1e-8};
    opt_agan_ = std::make_unique<num::Adam>(acfg, agan_.params());
    opt_critic_ = std::make_unique<num::Adam>(acfg, afgn_.critic_params());
    opt_gen_ = std::make_unique<num::Adam>(acfg, afgn_.generator_params());

    train_idx_ = data::indices_of_split(ds_.bundle, data::Split::TrainSource);
    if (train_idx_.empty()) throw DataError("no train-source samples");
    per_class_idx_.assign(cs, {});
    for (std::size_t i : train_idx_)
        per_class_idx_[static_cast<std::size_t>(ds_.bundle.labels[i] - 1)].push_back(i);
}

std::size_t Trainer::steps_per_epoch() const {
    return (train_idx_.size() + cfg_.ns - 1) / cfg_.ns;
}

std::vector<std::size_t> Trainer::schedule_batch(std::uint64_t step) const {
    std::uint64_t epoch = step / steps_per_epoch();
    std::size_t slot = static_cast<std::size_t>(step % steps_per_epoch());
    num::Rng sched(cfg_.seed, kSchedStreamBase + epoch);
    std::vector<std::vector<std::size_t>> per_class = per_class_idx_;
    for (auto& lst : per_class) sched.shuffle(lst);
    // class-balanced round-robin over source classes
    std::vector<std::size_t> order;
    order.reserve(train_idx_.size());
    std::size_t longest = 0;
    for (const auto& lst : per_class) longest = std::max(longest, lst.size());
    for (std::size_t t = 0; t < longest; ++t)
        for (const auto& lst : per_class)
            if (t < lst.size()) order.push_back(lst[t]);
    std::size_t begin = slot * cfg_.ns;
    std::size_t end = std::min(order.size(), begin + cfg_.ns);
    return std::vector<std::size_t>(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                    order.begin() + static_cast<std::ptrdiff_t>(end));
}

void Trainer::ensure_soft_targets() {
    if (!soft_targets_)
        soft_targets_ = pmi::soft_targets_from_semantics(ds_.class_sem.source,
                                                         ds_.class_sem.target);
}

LossRecord Trainer::train_step(const std::vector<std::size_t>& batch) {
    if (batch.empty()) throw DataError("empty batch");
    std::size_t cs = ds_.class_sem.source_classes();
    std::vector<std::int32_t> labels;
    std::vector<Tensor> a_batch;
    for (std::size_t i : batch) {
        std::int32_t y = ds_.bundle.labels[i];
        if (ds_.bundle.split[i] != data::Split::TrainSource || y < 1 ||
            static_cast<std::size_t>(y) > cs)
            throw DataError("batch contains a non-train-source sample (index " +
                            std::to_string(i) + ")");
        labels.push_back(y);
        a_batch.push_back(ds_.class_sem.of_class(y));
    }
    if (!cfg_.disable_L_u) ensure_soft_targets();

    std::size_t ns = batch.size();
    std::size_t r = ds_.bundle.regions();

    // fixed draw order per step: bound-feature noise, then generator noise
    std::vector<Tensor> eps_bound;
    for (std::size_t i = 0; i < ns; ++i)
        eps_bound.push_back(rng_.gaussian_tensor({r, cfg_.agan.m}));

    std::vector<Tensor> x_tilde;
    if (!cfg_.disable_L_m1) {
        for (std::size_t i = 0; i < ns; ++i) {
            Tensor eps = rng_.gaussian_tensor({cfg_.afgn.z});
            x_tilde.push_back(afgn::generate_value(afgn_, eps, a_batch[i]));
        }
    }

    LossRecord rec;
    std::vector<Tensor> fs_batch;

    {  // AGAN update (full embedding objective; x~ held constant)
        num::Tape tape;
        num::Var v_prime = agan::attribute_projection(tape, agan_, ds_.attr_sem.vectors);
        agan::AganLossInputs in;
        in.labels = labels;
        in.soft_targets = cfg_.disable_L_u ? nullptr : &*soft_targets_;
        in.x_tilde = cfg_.disable_L_m1 ? nullptr : &x_tilde;
        for (std::size_t i = 0; i < ns; ++i) {
            agan::SampleTrace tr = agan::embed(tape, agan_, ds_.bundle.sample(batch[i]),
                                               v_prime, a_batch[i], &eps_bound[i]);
            in.logit_vars.push_back(agan::logits(tape, agan_, tr.fs));
            in.traces.push_back(tr);
        }
        agan::AganLosses ls = agan::losses(tape, agan_, in);
        tape.backward(ls.total_var);
        for (std::size_t i = 0; i < ns; ++i) fs_batch.push_back(tape.val(in.traces[i].fs));
        std::vector<Tensor> grads;
        for (Tensor* p : agan_.params()) grads.push_back(tape.grad_for(*p));
        opt_agan_->step(agan_.params(), grads);
        rec.ce = ls.ce;
        rec.lu = ls.lu;
        rec.lm1 = ls.lm1;
        rec.kl_term = ls.kl_term;
        rec.mean_kl = ls.mean_kl;
        rec.agan_total = ls.total;
    }

    for (std::size_t c = 0; c < cfg_.afgn.n_critic; ++c) {
        std::vector<Tensor> xt;
        for (std::size_t i = 0; i < ns; ++i)
            xt.push_back(afgn::generate_value(afgn_, rng_.gaussian_tensor({cfg_.afgn.z}),
                                              a_batch[i]));
        num::Tape tape;
        afgn::CriticLoss cl = afgn::critic_loss(tape, afgn_, fs_batch, xt, a_batch);
        tape.backward(cl.total_var);
        std::vector<Tensor> grads;
        for (Tensor* p : afgn_.critic_params()) grads.push_back(tape.grad_for(*p));
        opt_critic_->step(afgn_.critic_params(), grads);
        rec.critic = cl.total;
    }

    {  // generator update (critic and h_2 frozen, fs constant)
        std::vector<Tensor> eps_gen;
        for (std::size_t i = 0; i < ns; ++i)
            eps_gen.push_back(rng_.gaussian_tensor({cfg_.afgn.z}));
        num::Tape tape;
        afgn::GenLoss gl = afgn::generator_loss(tape, afgn_, agan_, fs_batch, a_batch,
                                                eps_gen, labels);
        tape.backward(gl.total_var);
        std::vector<Tensor> grads;
        for (Tensor* p : afgn_.generator_params()) grads.push_back(tape.grad_for(*p));
        opt_gen_->step(afgn_.generator_params(), grads);
        rec.gen = gl.total;
    }
    return rec;
}

void Trainer::run_steps(std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
        LossRecord rec = train_step(schedule_batch(step_));
        history_.push_back(rec);
        ++step_;
    }
}

void Trainer::fit() {
    std::size_t total = cfg_.epochs * steps_per_epoch();
    if (step_ < total) run_steps(total - static_cast<std::size_t>(step_));
}

namespace {

void add_adam_state(data::BundleWriter& w, const std::string& prefix, num::Adam& opt) {
    auto& m = opt.first_moments();
    auto& v = opt.second_moments();
    for (std::size_t i = 0; i < m.size(); ++i) {
        w.add_f64(prefix + "." + std::to_string(i) + ".m", m[i]);
        w.add_f64(prefix + "." + std::to_string(i) + ".v", v[i]);
    }
    w.set_meta(prefix + ".steps", std::to_string(opt.steps()));
}

void load_adam_state(const data::BundleReader& r, const std::string& prefix, num::Adam& opt) {
    auto& m = opt.first_moments();
    auto& v = opt.second_moments();
    for (std::size_t i = 0; i < m.size(); ++i) {
        m[i] = r.tensor(prefix + "." + std::to_string(i) + ".m");
        v[i] = r.tensor(prefix + "." + std::to_string(i) + ".v");
    }
    opt.set_steps(std::stoull(r.meta(prefix + ".steps", "0")));
}

}  // namespace

void Trainer::save_checkpoint(const std::filesystem::path& dir) const {
    data::BundleWriter w;
    w.set_meta("kind", "checkpoint");
    w.set_meta("config", cfg_.canonical_text());
    w.set_meta("config_hash", std::to_string(cfg_.hash()));
    w.set_meta("step", std::to_string(step_));
    w.set_meta("rng_counter", std::to_string(rng_.counter()));
    w.set_meta("r", std::to_string(agan_.r));
    w.set_meta("d", std::to_string(agan_.d));
    w.set_meta("A", std::to_string(agan_.A));
    w.set_meta("g", std::to_string(agan_.g));
    w.set_meta("c_source", std::to_string(agan_.c_source));
    w.set_meta("c_target", std::to_string(agan_.c_target));
    auto& self = const_cast<Trainer&>(*this);
    for (auto& [name, p] : self.agan_.named_params()) w.add_f64(name, *p);
    for (auto& [name, p] : self.afgn_.named_params()) w.add_f64(name, *p);
    add_adam_state(w, "opt.agan", *self.opt_agan_);
    add_adam_state(w, "opt.critic", *self.opt_critic_);
    add_adam_state(w, "opt.gen", *self.opt_gen_);
    if (!history_.empty()) {
        Tensor h({history_.size(), 8});
        for (std::size_t i = 0; i < history_.size(); ++i) {
            const LossRecord& x = history_[i];
            double row[8] = {x.ce, x.lu, x.lm1, x.kl_term, x.mean_kl, x.agan_total,
                             x.critic, x.gen};
            for (std::size_t j = 0; j < 8; ++j) h.at(i, j) = row[j];
        }
        w.add_f64("history", h);
    }
    w.write(dir);
}

Trainer Trainer::load_checkpoint(const std::filesystem::path& dir, TrainConfig cfg,
                                 const data::Dataset& ds) {
    data::BundleReader r(dir);
    if (r.meta("kind") != "checkpoint") throw DataError("not a checkpoint bundle: " + dir.string());
    if (r.meta("config_hash") != std::to_string(cfg.hash()))
        throw DataError("checkpoint config hash mismatch; refusing to resume");
    Trainer t(std::move(cfg), ds);
    for (auto& [name, p] : t.agan_.named_params()) *p = r.tensor(name);
    for (auto& [name, p] : t.afgn_.named_params()) *p = r.tensor(name);
    load_adam_state(r, "opt.agan", *t.opt_agan_);
    load_adam_state(r, "opt.critic", *t.opt_critic_);
    load_adam_state(r, "opt.gen", *t.opt_gen_);
    t.step_ = std::stoull(r.meta("step", "0"));
    t.rng_.set_counter(std::stoull(r.meta("rng_counter", "0")));
    if (r.has("history")) {
        Tensor h = r.tensor("history");
        for (std::size_t i = 0; i < h.extent(0); ++i)
            t.history_.push_back({h.at(i, 0), h.at(i, 1), h.at(i, 2), h.at(i, 3),
                                  h.at(i, 4), h.at(i, 5), h.at(i, 6), h.at(i, 7)});
    }
    return t;
}

TrainedModels load_models(const std::filesystem::path& dir) {
    data::BundleReader r(dir);
    if (r.meta("kind") != "checkpoint") throw DataError("not a checkpoint bundle: " + dir.string());
    TrainedModels out;
    out.cfg = TrainConfig::from_string(r.meta("config"));
    out.cfg.agan.one_step_attention = out.cfg.one_step_attention_only;
    out.cfg.afgn.use_cls = !out.cfg.disable_L_cls;
    out.cfg.afgn.use_m2 = !out.cfg.disable_L_m2;
    std::size_t rr = std::stoul(r.meta("r")), d = std::stoul(r.meta("d"));
    std::size_t A = std::stoul(r.meta("A")), g = std::stoul(r.meta("g"));
    std::size_t cs = std::stoul(r.meta("c_source")), ct = std::stoul(r.meta("c_target"));
    num::Rng dummy(0, 0);
    out.agan = agan::AganModel::init(rr, d, A, g, cs, ct, out.cfg.agan, dummy);
    out.afgn = afgn::AfgnModel::init(out.cfg.agan.m, A, out.cfg.afgn, dummy);
    for (auto& [name, p] : out.agan.named_params()) *p = r.tensor(name);
    for (auto& [name, p] : out.afgn.named_params()) *p = r.tensor(name);
    out.steps = std::stoull(r.meta("step", "0"));
    return out;
}

}  // namespace agzsl::train
