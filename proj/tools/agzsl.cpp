// Command-line front end. Links only the C shared-library surface.
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "agzsl.h"

namespace {

int finish(agzsl_status st) {
    if (st != AGZSL_OK) std::fprintf(stderr, "error: %s\n", agzsl_last_error());
    return static_cast<int>(st);
}

// Reads a whole file; empty path yields an empty string.
bool slurp(const std::string& path, std::string& out) {
    if (path.empty()) return true;
    std::ifstream f(path);
    if (!f) return false;
    std::ostringstream os;
    os << f.rdbuf();
    out = os.str();
    return true;
}

struct ModelGuard {
    agzsl_model* m = nullptr;
    ~ModelGuard() { agzsl_model_free(m); }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Attribute-guided GZSL: synthetic data, training, evaluation"};
    app.require_subcommand(1);

    std::string data_dir, out_dir, ckpt_dir, resume_dir, config_path, spec_path;
    std::string protocol = "AGAN-GZSL", report_path;
    std::size_t per_class = 0, max_samples = 0;
    std::uint64_t seed = 1;

    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset bundle");
    gen->add_option("--out", out_dir, "Output bundle directory")->required();
    gen->add_option("--spec", spec_path, "Spec overrides file (key = value lines)");

    auto* validate = app.add_subcommand("validate", "Check a dataset bundle's invariants");
    validate->add_option("--data", data_dir, "Dataset bundle directory")->required();

    auto* train = app.add_subcommand("train", "Train and write a checkpoint");
    train->add_option("--data", data_dir, "Dataset bundle directory")->required();
    train->add_option("--out", out_dir, "Checkpoint output directory")->required();
    train->add_option("--config", config_path, "Config file (key = value lines)");
    train->add_option("--resume", resume_dir, "Checkpoint to resume from");

    auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
    ev->add_option("--checkpoint", ckpt_dir, "Checkpoint directory")->required();
    ev->add_option("--data", data_dir, "Dataset bundle directory")->required();
    ev->add_option("--protocol", protocol,
                   "AGAN-GZSL | AGAN-ZSL | AFGN-GZSL | AFGN-ZSL");
    ev->add_option("--report", report_path, "Write the key-value report here");

    auto* synth = app.add_subcommand("synth", "Synthesize class-conditioned features");
    synth->add_option("--checkpoint", ckpt_dir, "Checkpoint directory")->required();
    synth->add_option("--data", data_dir, "Dataset bundle directory")->required();
    synth->add_option("--out", out_dir, "Output bundle directory")->required();
    synth->add_option("--per-class", per_class, "Features per class (0 = trained default)");
    synth->add_option("--seed", seed, "Noise seed");

    auto* pmi = app.add_subcommand("pmi", "Dump class-similarity tables");
    pmi->add_option("--data", data_dir, "Dataset bundle directory")->required();
    pmi->add_option("--out", out_dir, "Output bundle directory")->required();

    auto* attn = app.add_subcommand("export-attn", "Export attention records");
    attn->add_option("--checkpoint", ckpt_dir, "Checkpoint directory")->required();
    attn->add_option("--data", data_dir, "Dataset bundle directory")->required();
    attn->add_option("--out", out_dir, "Output bundle directory")->required();
    attn->add_option("--max-samples", max_samples, "Cap on exported samples (0 = all)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (gen->parsed()) {
        std::string spec;
        if (!slurp(spec_path, spec)) {
            std::fprintf(stderr, "error: cannot read spec file %s\n", spec_path.c_str());
            return 2;
        }
        return finish(agzsl_gen_data(spec.c_str(), out_dir.c_str()));
    }
    if (validate->parsed()) {
        int rc = finish(agzsl_validate(data_dir.c_str()));
        if (rc == 0) std::printf("ok\n");
        return rc;
    }
    if (train->parsed()) {
        std::string config;
        if (!slurp(config_path, config)) {
            std::fprintf(stderr, "error: cannot read config file %s\n", config_path.c_str());
            return 2;
        }
        return finish(agzsl_train(config.c_str(), data_dir.c_str(), out_dir.c_str(),
                                  resume_dir.empty() ? nullptr : resume_dir.c_str()));
    }

    ModelGuard guard;
    if (ev->parsed() || synth->parsed() || attn->parsed()) {
        agzsl_status st = agzsl_model_load(ckpt_dir.c_str(), &guard.m);
        if (st != AGZSL_OK) return finish(st);
    }
    if (ev->parsed()) {
        double s = 0, t = 0, h = 0;
        agzsl_status st = agzsl_eval(guard.m, data_dir.c_str(), protocol.c_str(),
                                     report_path.empty() ? nullptr : report_path.c_str(),
                                     &s, &t, &h);
        if (st == AGZSL_OK)
            std::printf("protocol %s\nS %.2f\nT %.2f\nH %.2f\n", protocol.c_str(), s, t, h);
        return finish(st);
    }
    if (synth->parsed())
        return finish(agzsl_synth(guard.m, data_dir.c_str(), per_class, seed, out_dir.c_str()));
    if (pmi->parsed())
        return finish(agzsl_pmi_dump(data_dir.c_str(), out_dir.c_str()));
    if (attn->parsed())
        return finish(agzsl_export_attention(guard.m, data_dir.c_str(), max_samples,
                                             out_dir.c_str()));
    return 1;
}
