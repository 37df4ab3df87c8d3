#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "agzsl/adam.hpp"
#include "agzsl/afgn.hpp"
#include "agzsl/agan.hpp"
#include "agzsl/datamodel.hpp"

namespace agzsl::train {

struct TrainConfig {
    std::size_t ns = 32;       // batch size
    std::size_t epochs = 300;
    std::uint64_t seed = 1;
    double lr = 1e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    agan::AganConfig agan;
    afgn::AfgnConfig afgn;
    // ablation switches
    bool disable_L_u = false;
    bool one_step_attention_only = false;
    bool disable_L_cls = false;
    bool disable_L_m1 = false;
    bool disable_L_m2 = false;
    // downstream classifier fit
    afgn::DownstreamConfig downstream;

    // Flat key-value text, one `key = value` per line; keys match the field
    // names above (nested configs are flattened, e.g. lambda_alpha, gamma).
    static TrainConfig from_string(const std::string& text);
    static TrainConfig from_file(const std::filesystem::path& path);
    std::string canonical_text() const;
    std::uint64_t hash() const;
};

struct LossRecord {
    double ce = 0, lu = 0, lm1 = 0, kl_term = 0, mean_kl = 0, agan_total = 0;
    double critic = 0, gen = 0;
};

class Trainer {
public:
    Trainer(TrainConfig cfg, const data::Dataset& ds);

    // One alternating step on an explicit batch of train-source sample
    // indices: AGAN update, n_critic critic updates, one generator update.
    LossRecord train_step(const std::vector<std::size_t>& batch);

    // Runs n scheduled steps; the batch schedule is a pure function of
    // (seed, step index), so resuming from a checkpoint continues the exact
    // same sequence.
    void run_steps(std::size_t n);

    // Full run: epochs * steps_per_epoch scheduled steps.
    void fit();

    std::size_t steps_per_epoch() const;
    std::uint64_t step_count() const { return step_; }
    const std::vector<LossRecord>& history() const { return history_; }
    bool pmi_computed() const { return soft_targets_.has_value(); }

    agan::AganModel& agan_model() { return agan_; }
    afgn::AfgnModel& afgn_model() { return afgn_; }
    const TrainConfig& config() const { return cfg_; }

    void save_checkpoint(const std::filesystem::path& dir) const;
    // Restores a trainer mid-run; refuses a checkpoint whose config hash
    // differs from cfg.
    static Trainer load_checkpoint(const std::filesystem::path& dir, TrainConfig cfg,
                                   const data::Dataset& ds);

    // Batch of train-source indices for a given global step.
    std::vector<std::size_t> schedule_batch(std::uint64_t step) const;

private:
    void ensure_soft_targets();

    TrainConfig cfg_;
    const data::Dataset& ds_;
    std::vector<std::size_t> train_idx_;
    std::vector<std::vector<std::size_t>> per_class_idx_;  // source classes
    agan::AganModel agan_;
    afgn::AfgnModel afgn_;
    std::unique_ptr<num::Adam> opt_agan_, opt_critic_, opt_gen_;
    num::Rng rng_;
    std::uint64_t step_ = 0;
    std::optional<num::Tensor> soft_targets_;
    std::vector<LossRecord> history_;
};

// Loads only the trained models and config from a checkpoint (for eval).
struct TrainedModels {
    TrainConfig cfg;
    agan::AganModel agan;
    afgn::AfgnModel afgn;
    std::uint64_t steps = 0;
};
TrainedModels load_models(const std::filesystem::path& dir);

}  // namespace agzsl::train
