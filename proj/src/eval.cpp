#include "agzsl/eval.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "agzsl/bundle.hpp"

namespace agzsl::eval {

using num::Tensor;

namespace {

constexpr std::uint64_t kSynthStream = 2000;

}  // namespace

const char* protocol_name(Protocol p) {
    switch (p) {
        case Protocol::AganGzsl: return "AGAN-GZSL";
        case Protocol::AganZsl: return "AGAN-ZSL";
        case Protocol::AfgnGzsl: return "AFGN-GZSL";
        case Protocol::AfgnZsl: return "AFGN-ZSL";
    }
    throw DataError("unknown protocol");
}

Protocol protocol_from_name(const std::string& name) {
    if (name == "AGAN-GZSL") return Protocol::AganGzsl;
    if (name == "AGAN-ZSL") return Protocol::AganZsl;
    if (name == "AFGN-GZSL") return Protocol::AfgnGzsl;
    if (name == "AFGN-ZSL") return Protocol::AfgnZsl;
    throw DataError("unknown protocol name: " + name);
}

double harmonic_mean(double s, double t) {
    if (s < 0 || t < 0) throw DataError("harmonic_mean: negative input");
    if (s + t == 0) return 0.0;
    return 2.0 * s * t / (s + t);
}

PerClassAccuracy per_class_top1(const std::vector<std::int32_t>& preds,
                                const std::vector<std::int32_t>& labels,
                                const std::vector<std::int32_t>& class_set) {
    if (preds.size() != labels.size())
        throw DimensionError("per_class_top1: prediction/label count mismatch");
    std::map<std::int32_t, std::pair<std::size_t, std::size_t>> tally;  // class -> (hit, n)
    for (std::int32_t c : class_set) tally[c] = {0, 0};
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto it = tally.find(labels[i]);
        if (it == tally.end()) continue;
        ++it->second.second;
        if (preds[i] == labels[i]) ++it->second.first;
    }
    PerClassAccuracy out;
    double sum = 0.0;
    for (std::int32_t c : class_set) {
        auto [hit, n] = tally[c];
        if (n == 0) throw DataError("per_class_top1: class " + std::to_string(c) + " has no samples");
        double acc = 100.0 * static_cast<double>(hit) / static_cast<double>(n);
        out.class_ids.push_back(c);
        out.acc.push_back(acc);
        sum += acc;
    }
    out.mean = sum / static_cast<double>(class_set.size());
    return out;
}

std::int32_t predict_from_scores(const std::vector<double>& scores, std::int32_t offset) {
    if (scores.empty()) throw DataError("predict_from_scores: empty scores");
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;
    return static_cast<std::int32_t>(best + 1) + offset;
}

namespace {

std::vector<std::int32_t> class_range(std::int32_t lo, std::int32_t hi) {
    std::vector<std::int32_t> out;
    for (std::int32_t c = lo; c <= hi; ++c) out.push_back(c);
    return out;
}

// AFGN route: score of candidate class c is the downstream logit of c at the
// embedding conditioned on a_c.
std::vector<double> afgn_scores(agan::AganModel& agan, const afgn::Downstream& h,
                                const Tensor& raw, const data::Dataset& ds,
                                bool zsl_only) {
    std::vector<Tensor> embeds =
        agan::embed_candidates(agan, raw, ds.class_sem, ds.attr_sem.vectors);
    std::size_t cs = ds.class_sem.source_classes();
    std::size_t ct = ds.class_sem.target_classes();
    std::vector<double> scores;
    if (zsl_only) {
        for (std::size_t j = 0; j < ct; ++j)
            scores.push_back(h.scores(embeds[cs + j])[j]);
    } else {
        for (std::size_t c = 0; c < cs + ct; ++c)
            scores.push_back(h.scores(embeds[c])[c]);
    }
    return scores;
}

}  // namespace

EvalReport evaluate(agan::AganModel& agan, afgn::AfgnModel& afgn,
                    const data::Dataset& ds, Protocol p, std::uint64_t seed,
                    const afgn::DownstreamConfig& dcfg) {
    if (ds.class_sem.attributes() != agan.A)
        throw DataError("evaluate: dataset attribute count " +
                        std::to_string(ds.class_sem.attributes()) +
                        " does not match the model (" + std::to_string(agan.A) + ")");
    if (ds.bundle.regions() != agan.r || ds.bundle.dim() != agan.d)
        throw DataError("evaluate: feature geometry does not match the model");
    std::int32_t cs = static_cast<std::int32_t>(ds.class_sem.source_classes());
    std::int32_t ct = static_cast<std::int32_t>(ds.class_sem.target_classes());
    bool zsl = p == Protocol::AganZsl || p == Protocol::AfgnZsl;
    bool generative = p == Protocol::AfgnGzsl || p == Protocol::AfgnZsl;

    std::vector<std::size_t> idx_s = data::indices_of_split(ds.bundle, data::Split::TestSource);
    std::vector<std::size_t> idx_t = data::indices_of_split(ds.bundle, data::Split::TestTarget);
    if (idx_t.empty() || (!zsl && idx_s.empty()))
        throw DataError("evaluate: empty test split");

    afgn::Downstream h;
    if (generative) {
        num::Rng rng(seed, kSynthStream);
        afgn::SynthSet set =
            afgn::synthesize_features(afgn, ds.class_sem, afgn.cfg.per_class, rng);
        h = afgn::fit_downstream(set,
                                 zsl ? afgn::DownstreamMode::Zsl : afgn::DownstreamMode::Gzsl,
                                 static_cast<std::size_t>(cs), static_cast<std::size_t>(ct),
                                 agan.cfg.m, dcfg);
    }

    auto predict = [&](std::size_t i) {
        Tensor raw = ds.bundle.sample(i);
        std::vector<double> scores =
            generative ? afgn_scores(agan, h, raw, ds, zsl)
                       : agan::score_candidates(agan, raw, ds.class_sem, ds.attr_sem.vectors);
        if (zsl && !generative) {
            scores = std::vector<double>(scores.begin() + cs, scores.end());
        }
        return predict_from_scores(scores, zsl ? cs : 0);
    };

    EvalReport rep;
    rep.protocol = p;
    std::vector<std::int32_t> preds_t, labels_t;
    for (std::size_t i : idx_t) {
        preds_t.push_back(predict(i));
        labels_t.push_back(ds.bundle.labels[i]);
    }
    PerClassAccuracy acc_t = per_class_top1(preds_t, labels_t, class_range(cs + 1, cs + ct));
    rep.t = acc_t.mean;
    if (zsl) {
        rep.class_ids = acc_t.class_ids;
        rep.per_class = acc_t.acc;
        return rep;
    }
    std::vector<std::int32_t> preds_s, labels_s;
    for (std::size_t i : idx_s) {
        preds_s.push_back(predict(i));
        labels_s.push_back(ds.bundle.labels[i]);
    }
    PerClassAccuracy acc_s = per_class_top1(preds_s, labels_s, class_range(1, cs));
    rep.s = acc_s.mean;
    rep.h = harmonic_mean(rep.s, rep.t);
    rep.class_ids = acc_s.class_ids;
    rep.per_class = acc_s.acc;
    rep.class_ids.insert(rep.class_ids.end(), acc_t.class_ids.begin(), acc_t.class_ids.end());
    rep.per_class.insert(rep.per_class.end(), acc_t.acc.begin(), acc_t.acc.end());
    return rep;
}

std::string report_text(const EvalReport& rep) {
    std::ostringstream os;
    os.precision(17);
    os << "protocol = " << protocol_name(rep.protocol) << "\n"
       << "S = " << rep.s << "\n"
       << "T = " << rep.t << "\n"
       << "H = " << rep.h << "\n";
    for (std::size_t i = 0; i < rep.class_ids.size(); ++i)
        os << "class." << rep.class_ids[i] << " = " << rep.per_class[i] << "\n";
    return os.str();
}

void write_report(const EvalReport& rep, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write report " + path.string());
    f << report_text(rep);
    if (!f) throw IoError("failed writing report " + path.string());
}

void export_attention(agan::AganModel& model, const data::Dataset& ds,
                      const std::vector<std::size_t>& samples,
                      const std::filesystem::path& dir) {
    if (samples.empty()) throw DataError("export_attention: no samples");
    std::size_t n = samples.size(), r = model.r;
    Tensor alpha({n, r}), alpha2({n, r}), ht({n, r});
    std::vector<std::int32_t> dom(n * r), ids(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t i = samples[k];
        if (i >= ds.bundle.count())
            throw DataError("export_attention: sample index out of range");
        Tensor a = ds.class_sem.of_class(ds.bundle.labels[i]);
        agan::AttentionRecord rec =
            agan::attention_of(model, ds.bundle.sample(i), a, ds.attr_sem.vectors);
        ids[k] = static_cast<std::int32_t>(i);
        for (std::size_t j = 0; j < r; ++j) {
            alpha.at(k, j) = rec.alpha[j];
            alpha2.at(k, j) = rec.alpha2[j];
            ht.at(k, j) = rec.h_t[j];
            dom[k * r + j] = static_cast<std::int32_t>(rec.dom_attr[j]);
        }
    }
    data::BundleWriter w;
    w.set_meta("kind", "attention");
    w.add_f64("alpha", alpha);
    w.add_f64("alpha2", alpha2);
    w.add_f64("h_t", ht);
    w.add_i32("dom_attr", dom, {n, r});
    w.add_i32("sample_ids", ids);
    w.write(dir);

    std::ofstream f(dir / "attention.txt", std::ios::binary);
    if (!f) throw IoError("cannot write attention table in " + dir.string());
    f << "# sample region alpha alpha2 attr h_t\n";
    f.precision(17);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < r; ++j)
            f << ids[k] << " " << j << " " << alpha.at(k, j) << " " << alpha2.at(k, j)
              << " " << dom[k * r + j] << " " << ht.at(k, j) << "\n";
    if (!f) throw IoError("failed writing attention table in " + dir.string());
}

}  // namespace agzsl::eval
