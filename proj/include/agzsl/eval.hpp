#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "agzsl/afgn.hpp"
#include "agzsl/agan.hpp"
#include "agzsl/datamodel.hpp"

namespace agzsl::eval {

// Scoring protocols: embedding-network logits or the synthesize-then-classify
// route, each in the generalized (all classes) and restricted (target classes
// only) variants.
enum class Protocol { AganGzsl, AganZsl, AfgnGzsl, AfgnZsl };

const char* protocol_name(Protocol p);
Protocol protocol_from_name(const std::string& name);

struct EvalReport {
    Protocol protocol = Protocol::AganGzsl;
    std::vector<std::int32_t> class_ids;  // classes covered by per_class, 1-based
    std::vector<double> per_class;        // percent, aligned with class_ids
    double s = 0, t = 0, h = 0;           // percent; s and h are 0 under ZSL
};

// H = 2ST / (S + T), defined as 0 when S + T = 0.
double harmonic_mean(double s, double t);

struct PerClassAccuracy {
    std::vector<std::int32_t> class_ids;
    std::vector<double> acc;  // percent
    double mean = 0;          // unweighted mean over classes, percent
};

// Per-class Top-1: accuracy within each class of the set, then the unweighted
// mean. Throws if a class of the set has no samples.
PerClassAccuracy per_class_top1(const std::vector<std::int32_t>& preds,
                                const std::vector<std::int32_t>& labels,
                                const std::vector<std::int32_t>& class_set);

// Argmax over scores as a 1-based label; ties break toward the lowest index.
// `offset` shifts the score index into the label space (ZSL scores cover only
// the target slice).
std::int32_t predict_from_scores(const std::vector<double>& scores, std::int32_t offset = 0);

// Full protocol evaluation against frozen models. The AFGN protocols
// synthesize features from a deterministic stream of `seed`, fit the
// downstream classifier, then score per-candidate-conditioned embeddings.
EvalReport evaluate(agan::AganModel& agan, afgn::AfgnModel& afgn,
                    const data::Dataset& ds, Protocol p, std::uint64_t seed,
                    const afgn::DownstreamConfig& dcfg = {});

// Flat key-value serialization of a report.
std::string report_text(const EvalReport& rep);
void write_report(const EvalReport& rep, const std::filesystem::path& path);

// Per-sample attention export: a manifest bundle (alpha, alpha2, dominant
// attribute, its probability, sample ids) plus a flat text table for external
// plotting. Each sample is conditioned on its own class vector.
void export_attention(agan::AganModel& model, const data::Dataset& ds,
                      const std::vector<std::size_t>& samples,
                      const std::filesystem::path& dir);

}  // namespace agzsl::eval
