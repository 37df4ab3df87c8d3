#include "agzsl.h"

#include <sstream>
#include <string>

#include "agzsl/bundle.hpp"
#include "agzsl/datamodel.hpp"
#include "agzsl/error.hpp"
#include "agzsl/eval.hpp"
#include "agzsl/pmi.hpp"
#include "agzsl/trainer.hpp"

namespace {

thread_local std::string g_last_error;

agzsl_status fail(agzsl_status code, const std::string& msg) {
    g_last_error = msg;
    return code;
}

// Maps the library exception taxonomy onto the status codes.
template <typename Fn>
agzsl_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return AGZSL_OK;
    } catch (const agzsl::NumericError& e) {
        return fail(AGZSL_NUMERIC, e.what());
    } catch (const agzsl::DimensionError& e) {
        return fail(AGZSL_DATA, e.what());
    } catch (const agzsl::DataError& e) {
        return fail(AGZSL_DATA, e.what());
    } catch (const agzsl::IoError& e) {
        return fail(AGZSL_DATA, e.what());
    } catch (const std::exception& e) {
        return fail(AGZSL_DATA, e.what());
    }
}

agzsl::data::SynthSpec parse_spec(const char* text) {
    agzsl::data::SynthSpec spec;
    if (!text || !*text) return spec;
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
                throw agzsl::DataError("spec line " + std::to_string(lineno) +
                                       ": expected key = value");
            continue;
        }
        auto trim = [](std::string s) {
            std::size_t b = s.find_first_not_of(" \t\r");
            std::size_t e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        try {
            if (key == "source_classes") spec.source_classes = std::stoul(val);
            else if (key == "target_classes") spec.target_classes = std::stoul(val);
            else if (key == "attributes") spec.attributes = std::stoul(val);
            else if (key == "regions") spec.regions = std::stoul(val);
            else if (key == "dim") spec.dim = std::stoul(val);
            else if (key == "attr_dim") spec.attr_dim = std::stoul(val);
            else if (key == "samples_per_class") spec.samples_per_class = std::stoul(val);
            else if (key == "noise") spec.noise = std::stod(val);
            else if (key == "secondary") spec.secondary = std::stod(val);
            else if (key == "seed") spec.seed = std::stoull(val);
            else throw agzsl::DataError("spec: unknown key " + key);
        } catch (const std::invalid_argument&) {
            throw agzsl::DataError("spec: bad value for " + key + ": " + val);
        }
    }
    return spec;
}

}  // namespace

struct agzsl_model {
    agzsl::train::TrainedModels models;
};

extern "C" {

const char* agzsl_last_error(void) { return g_last_error.c_str(); }

agzsl_status agzsl_gen_data(const char* spec_text, const char* out_dir) {
    if (!out_dir) return fail(AGZSL_USAGE, "gen_data: out_dir is null");
    return guarded([&] {
        agzsl::data::SynthSpec spec = parse_spec(spec_text);
        spec.check();
        agzsl::data::Dataset ds = agzsl::data::generate_synthetic(spec);
        agzsl::data::save_dataset(ds, out_dir);
    });
}

agzsl_status agzsl_validate(const char* data_dir) {
    if (!data_dir) return fail(AGZSL_USAGE, "validate: data_dir is null");
    return guarded([&] {
        agzsl::data::Dataset ds = agzsl::data::load_dataset(data_dir);
        auto violations = agzsl::data::validate(ds);
        if (!violations.empty()) throw agzsl::DataError("invalid dataset: " + violations.front());
    });
}

agzsl_status agzsl_train(const char* config_text, const char* data_dir,
                         const char* out_dir, const char* resume_dir) {
    if (!data_dir || !out_dir) return fail(AGZSL_USAGE, "train: data_dir or out_dir is null");
    return guarded([&] {
        agzsl::train::TrainConfig cfg =
            agzsl::train::TrainConfig::from_string(config_text ? config_text : "");
        agzsl::data::Dataset ds = agzsl::data::load_dataset(data_dir);
        if (resume_dir) {
            agzsl::train::Trainer t =
                agzsl::train::Trainer::load_checkpoint(resume_dir, cfg, ds);
            t.fit();
            t.save_checkpoint(out_dir);
        } else {
            agzsl::train::Trainer t(cfg, ds);
            t.fit();
            t.save_checkpoint(out_dir);
        }
    });
}

agzsl_status agzsl_model_load(const char* checkpoint_dir, agzsl_model** out) {
    if (!checkpoint_dir || !out) return fail(AGZSL_USAGE, "model_load: null argument");
    *out = nullptr;
    return guarded([&] {
        auto* m = new agzsl_model{agzsl::train::load_models(checkpoint_dir)};
        *out = m;
    });
}

void agzsl_model_free(agzsl_model* model) { delete model; }

agzsl_status agzsl_eval(agzsl_model* model, const char* data_dir,
                        const char* protocol, const char* report_path,
                        double* s, double* t, double* h) {
    if (!model || !data_dir || !protocol) return fail(AGZSL_USAGE, "eval: null argument");
    agzsl::eval::Protocol p;
    try {
        p = agzsl::eval::protocol_from_name(protocol);
    } catch (const std::exception& e) {
        return fail(AGZSL_USAGE, e.what());
    }
    return guarded([&] {
        agzsl::data::Dataset ds = agzsl::data::load_dataset(data_dir);
        agzsl::eval::EvalReport rep =
            agzsl::eval::evaluate(model->models.agan, model->models.afgn, ds, p,
                                  model->models.cfg.seed, model->models.cfg.downstream);
        if (report_path) agzsl::eval::write_report(rep, report_path);
        if (s) *s = rep.s;
        if (t) *t = rep.t;
        if (h) *h = rep.h;
    });
}

agzsl_status agzsl_synth(agzsl_model* model, const char* data_dir,
                         size_t per_class, uint64_t seed, const char* out_dir) {
    if (!model || !data_dir || !out_dir) return fail(AGZSL_USAGE, "synth: null argument");
    return guarded([&] {
        agzsl::data::Dataset ds = agzsl::data::load_dataset(data_dir);
        if (ds.class_sem.attributes() != model->models.agan.A)
            throw agzsl::DataError("synth: dataset attribute count does not match the model");
        std::size_t n = per_class ? per_class : model->models.afgn.cfg.per_class;
        agzsl::num::Rng rng(seed, 0);
        agzsl::afgn::SynthSet set = agzsl::afgn::synthesize_features(
            model->models.afgn, ds.class_sem, n, rng);
        agzsl::data::BundleWriter w;
        w.set_meta("kind", "synthetic-features");
        agzsl::num::Tensor feats({set.features.size(), model->models.agan.cfg.m});
        for (std::size_t i = 0; i < set.features.size(); ++i)
            for (std::size_t j = 0; j < model->models.agan.cfg.m; ++j)
                feats.at(i, j) = set.features[i][j];
        w.add_f32("features", feats);
        w.add_i32("labels", set.labels);
        w.write(out_dir);
    });
}

agzsl_status agzsl_pmi_dump(const char* data_dir, const char* out_dir) {
    if (!data_dir || !out_dir) return fail(AGZSL_USAGE, "pmi_dump: null argument");
    return guarded([&] {
        agzsl::data::Dataset ds = agzsl::data::load_dataset(data_dir);
        agzsl::num::Tensor zs = agzsl::pmi::class_distributions(ds.class_sem.source);
        agzsl::num::Tensor zt = agzsl::pmi::class_distributions(ds.class_sem.target);
        agzsl::pmi::Joint joint = agzsl::pmi::joint_distribution(zt, zs);
        agzsl::pmi::PmiMatrix pm = agzsl::pmi::pmi_matrix(joint);
        agzsl::num::Tensor targets = agzsl::pmi::soft_targets(pm);
        agzsl::data::BundleWriter w;
        w.set_meta("kind", "pmi");
        w.add_f64("joint", joint.joint);
        w.add_f64("pmi", pm.values);
        w.add_f64("soft_targets", targets);
        w.write(out_dir);
    });
}

agzsl_status agzsl_export_attention(agzsl_model* model, const char* data_dir,
                                    size_t max_samples, const char* out_dir) {
    if (!model || !data_dir || !out_dir)
        return fail(AGZSL_USAGE, "export_attention: null argument");
    return guarded([&] {
        agzsl::data::Dataset ds = agzsl::data::load_dataset(data_dir);
        std::vector<std::size_t> idx =
            agzsl::data::indices_of_split(ds.bundle, agzsl::data::Split::TestTarget);
        if (max_samples && idx.size() > max_samples) idx.resize(max_samples);
        agzsl::eval::export_attention(model->models.agan, ds, idx, out_dir);
    });
}

}  // extern "C"
