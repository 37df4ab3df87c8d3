#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "agzsl/rng.hpp"
#include "agzsl/tensor.hpp"

namespace agzsl::data {

enum class Split : std::int32_t { TrainSource = 0, TestSource = 1, TestTarget = 2 };

// Region features with labels and split tags; the sole visual input.
struct FeatureBundle {
    num::Tensor features;  // N x r x d
    std::vector<std::int32_t> labels;  // 1-based class indices
    std::vector<Split> split;

    std::size_t count() const { return features.extent(0); }
    std::size_t regions() const { return features.extent(1); }
    std::size_t dim() const { return features.extent(2); }

    // Region feature matrix (r x d) of one sample.
    num::Tensor sample(std::size_t i) const;
};

struct ClassSemantics {
    num::Tensor source;  // Cs x A
    num::Tensor target;  // Ct x A

    std::size_t source_classes() const { return source.extent(0); }
    std::size_t target_classes() const { return target.extent(0); }
    std::size_t attributes() const { return source.extent(1); }

    // Semantic vector of a 1-based class index (source or target range).
    num::Tensor of_class(std::int32_t label) const;
};

struct AttributeSemantics {
    num::Tensor vectors;  // A x g
};

struct Dataset {
    FeatureBundle bundle;
    ClassSemantics class_sem;
    AttributeSemantics attr_sem;
};

struct SynthSpec {
    std::size_t source_classes = 8;
    std::size_t target_classes = 4;
    std::size_t attributes = 20;
    std::size_t regions = 9;
    std::size_t dim = 64;
    std::size_t attr_dim = 16;
    std::size_t samples_per_class = 40;
    double noise = 0.1;
    double secondary = 0.9;  // semantic score of each class's second attribute
    std::uint64_t seed = 1;

    void check() const;
};

// Planted structure of a synthetic dataset, for oracle-style verification.
struct SynthTruth {
    num::Tensor directions;                      // A x d unit attribute directions
    std::vector<std::vector<std::int32_t>> region_attr;  // per sample: attribute of each region
    std::vector<std::int32_t> top_attr_region;   // region forced to carry argmax a_c
};

// Deterministic synthetic fine-grained GZSL data. Each attribute owns a unit
// direction in feature space; each region of a sample realizes one attribute
// drawn proportionally to the class semantic vector, scaled by its score,
// plus noise. The trailing quarter of the feature dimensions carries pure
// noise. Every target class shares at least half of its high-score
// attributes with some source class.
Dataset generate_synthetic(const SynthSpec& spec, SynthTruth* truth = nullptr);

// Checks all datamodel invariants; returns violations (empty means pass).
std::vector<std::string> validate(const Dataset& ds);

void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

std::vector<std::size_t> indices_of_split(const FeatureBundle& b, Split s);

}  // namespace agzsl::data
