#include "agzsl/datamodel.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "agzsl/bundle.hpp"

namespace agzsl::data {

num::Tensor FeatureBundle::sample(std::size_t i) const {
    std::size_t r = regions(), d = dim();
    num::Tensor out({r, d});
    const double* src = features.data() + i * r * d;
    std::copy(src, src + r * d, out.data());
    return out;
}

num::Tensor ClassSemantics::of_class(std::int32_t label) const {
    std::size_t cs = source_classes(), ct = target_classes(), a = attributes();
    num::Tensor out({a});
    if (label >= 1 && static_cast<std::size_t>(label) <= cs) {
        for (std::size_t k = 0; k < a; ++k) out[k] = source.at(static_cast<std::size_t>(label - 1), k);
    } else if (label >= 1 && static_cast<std::size_t>(label) <= cs + ct) {
        for (std::size_t k = 0; k < a; ++k) out[k] = target.at(static_cast<std::size_t>(label) - cs - 1, k);
    } else {
        throw DataError("class label " + std::to_string(label) + " out of range");
    }
    return out;
}

void SynthSpec::check() const {
    if (source_classes == 0 || target_classes == 0 || attributes < 2 || regions == 0 ||
        dim == 0 || attr_dim < 2 || samples_per_class == 0)
        throw DataError("synth spec: all counts must be positive (A>=2, g>=2)");
    if (noise < 0.0) throw DataError("synth spec: noise must be >= 0");
    if (secondary <= 0.1 || secondary > 1.0)
        throw DataError("synth spec: secondary score must lie in (0.1, 1]");
}

Dataset generate_synthetic(const SynthSpec& spec, SynthTruth* truth) {
    spec.check();
    num::Rng rng(spec.seed, 0);
    std::size_t cs = spec.source_classes, ct = spec.target_classes, a = spec.attributes;
    std::size_t r = spec.regions, d = spec.dim, g = spec.attr_dim;

    // Class semantics. Source class c's primary attribute is c; its secondary
    // is class (c+2)'s primary, so a secondary attribute is never exclusive
    // evidence: attribute k marks class k (primary) and class k-2 (secondary)
    // and only the primary pins the class down. Target class j blends the
    // primaries of its two base source classes 2j mod Cs and (2j+1) mod Cs.
    // Scores are fixed (primary 1.0, secondary spec.secondary, background
    // 0.1), which makes the source->target association strength identical
    // for every target class.
    ClassSemantics sem;
    sem.source = num::Tensor::full({cs, a}, 0.1);
    sem.target = num::Tensor::full({ct, a}, 0.1);
    for (std::size_t c = 0; c < cs; ++c) {
        std::size_t sec = ((c + 2) % cs) % a;
        if (sec != c % a) sem.source.at(c, sec) = spec.secondary;
        sem.source.at(c, c % a) = 1.0;
    }
    for (std::size_t c = 0; c < ct; ++c) {
        std::size_t pa = ((2 * c) % cs) % a;
        std::size_t pb = ((2 * c + 1) % cs) % a;
        sem.target.at(c, pa) = 1.0;
        if (pb != pa) sem.target.at(c, pb) = spec.secondary;
    }

    AttributeSemantics attrs;
    attrs.vectors = rng.gaussian_tensor({a, g});

    // Planted unit directions live in the leading signal dimensions; the
    // trailing quarter of dims is nuisance.
    std::size_t d_noise = d / 4;
    std::size_t d_sig = d - d_noise;
    num::Tensor dirs({a, d});
    for (std::size_t k = 0; k < a; ++k) {
        double norm = 0.0;
        for (std::size_t j = 0; j < d_sig; ++j) {
            dirs.at(k, j) = rng.gaussian();
            norm += dirs.at(k, j) * dirs.at(k, j);
        }
        norm = std::sqrt(norm);
        for (std::size_t j = 0; j < d_sig; ++j) dirs.at(k, j) /= norm;
    }

    std::size_t n_classes = cs + ct;
    std::size_t n = n_classes * spec.samples_per_class;
    FeatureBundle bundle;
    bundle.features = num::Tensor({n, r, d});
    bundle.labels.resize(n);
    bundle.split.resize(n);
    if (truth) {
        truth->directions = dirs;
        truth->region_attr.assign(n, std::vector<std::int32_t>(r, 0));
        truth->top_attr_region.assign(n, 0);
    }

    std::size_t n_train = (spec.samples_per_class * 3) / 4;  // source-class train fraction
    std::size_t si = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        bool is_source = c < cs;
        num::Tensor ac = sem.of_class(static_cast<std::int32_t>(c + 1));
        double total = 0.0;
        for (std::size_t k = 0; k < a; ++k) total += ac[k];
        // High-score attributes in descending score order; every one of them
        // is guaranteed a region in every sample so class evidence is never
        // lost to sampling noise.
        std::vector<std::size_t> high;
        for (std::size_t k = 0; k < a; ++k)
            if (ac[k] >= 0.5) high.push_back(k);
        std::sort(high.begin(), high.end(),
                  [&](std::size_t x, std::size_t y) { return ac[x] > ac[y]; });
        if (high.size() > r) high.resize(r);
        for (std::size_t s = 0; s < spec.samples_per_class; ++s, ++si) {
            bundle.labels[si] = static_cast<std::int32_t>(c + 1);
            bundle.split[si] = !is_source ? Split::TestTarget
                               : (s < n_train ? Split::TrainSource : Split::TestSource);
            std::vector<std::size_t> perm(r);
            for (std::size_t i = 0; i < r; ++i) perm[i] = i;
            rng.shuffle(perm);
            std::vector<std::size_t> forced_attr(r, a);  // a = unforced marker
            for (std::size_t k = 0; k < high.size(); ++k) forced_attr[perm[k]] = high[k];
            double* sample = bundle.features.data() + si * r * d;
            for (std::size_t i = 0; i < r; ++i) {
                std::size_t attr;
                if (forced_attr[i] < a) {
                    attr = forced_attr[i];
                } else {
                    double u = rng.uniform() * total;
                    attr = a - 1;
                    double acc = 0.0;
                    for (std::size_t k = 0; k < a; ++k) {
                        acc += ac[k];
                        if (u < acc) { attr = k; break; }
                    }
                }
                double* region = sample + i * d;
                for (std::size_t j = 0; j < d_sig; ++j)
                    region[j] = ac[attr] * dirs.at(attr, j) + spec.noise * rng.gaussian();
                for (std::size_t j = d_sig; j < d; ++j)
                    region[j] = 3.0 * spec.noise * rng.gaussian();
                if (truth) truth->region_attr[si][i] = static_cast<std::int32_t>(attr);
            }
            // Free regions may repeat the top attribute; at zero noise such
            // duplicates are bitwise identical, so an argmax with strict ties
            // to the lowest index lands on the first occurrence. Record that.
            if (truth) {
                std::size_t first = perm[0];
                if (!high.empty())
                    for (std::size_t i = 0; i < r; ++i)
                        if (truth->region_attr[si][i] ==
                            static_cast<std::int32_t>(high[0])) { first = i; break; }
                truth->top_attr_region[si] = static_cast<std::int32_t>(first);
            }
        }
    }
    return Dataset{std::move(bundle), std::move(sem), std::move(attrs)};
}

std::vector<std::string> validate(const Dataset& ds) {
    std::vector<std::string> bad;
    const FeatureBundle& b = ds.bundle;
    std::size_t cs = ds.class_sem.source_classes();
    std::size_t ct = ds.class_sem.target_classes();
    if (b.features.rank() != 3) {
        bad.push_back("features must be N x r x d");
        return bad;
    }
    std::size_t n = b.count();
    if (n == 0) bad.push_back("empty bundle");
    if (b.labels.size() != n || b.split.size() != n)
        bad.push_back("labels/split length does not match sample count");
    if (!b.features.all_finite()) bad.push_back("non-finite feature values");
    if (cs < 1 || ct < 1) bad.push_back("need at least one source and one target class");
    std::size_t a = ds.class_sem.attributes();
    if (a < 2) bad.push_back("need at least two attributes");
    if (ds.class_sem.target.rank() != 2 || ds.class_sem.target.extent(1) != a)
        bad.push_back("attribute count mismatch between source and target semantics");
    if (ds.attr_sem.vectors.rank() != 2 || ds.attr_sem.vectors.extent(0) != a)
        bad.push_back("attribute count mismatch between class and attribute semantics");
    else if (ds.attr_sem.vectors.extent(1) < 2)
        bad.push_back("attribute embedding dimension must be >= 2");
    if (!ds.class_sem.source.all_finite() || !ds.class_sem.target.all_finite() ||
        !ds.attr_sem.vectors.all_finite())
        bad.push_back("non-finite semantics");
    for (std::size_t i = 0; i < std::min(n, b.labels.size()); ++i) {
        std::int32_t y = b.labels[i];
        bool src_range = y >= 1 && static_cast<std::size_t>(y) <= cs;
        bool tgt_range = y >= 1 && !src_range && static_cast<std::size_t>(y) <= cs + ct;
        Split s = b.split[i];
        if (!src_range && !tgt_range) {
            bad.push_back("sample " + std::to_string(i) + ": label out of range");
        } else if ((s == Split::TestTarget) != tgt_range) {
            bad.push_back("sample " + std::to_string(i) + ": label/split mismatch");
        }
    }
    return bad;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    BundleWriter w;
    w.add_f32("features", ds.bundle.features);
    std::vector<std::int32_t> labels = ds.bundle.labels;
    std::vector<std::int32_t> split(ds.bundle.split.size());
    for (std::size_t i = 0; i < split.size(); ++i)
        split[i] = static_cast<std::int32_t>(ds.bundle.split[i]);
    w.add_i32("labels", labels);
    w.add_i32("split", split);
    w.add_f32("class_sem_source", ds.class_sem.source);
    w.add_f32("class_sem_target", ds.class_sem.target);
    w.add_f32("attr_sem", ds.attr_sem.vectors);
    w.set_meta("kind", "dataset");
    w.write(dir);
}

Dataset load_dataset(const std::filesystem::path& dir) {
    BundleReader r(dir);
    Dataset ds;
    ds.bundle.features = r.tensor("features");
    if (ds.bundle.features.rank() != 3) throw DataError("features must be N x r x d");
    ds.bundle.labels = r.ints("labels");
    for (std::int32_t s : r.ints("split")) {
        if (s < 0 || s > 2) throw DataError("invalid split tag " + std::to_string(s));
        ds.bundle.split.push_back(static_cast<Split>(s));
    }
    ds.class_sem.source = r.tensor("class_sem_source");
    ds.class_sem.target = r.tensor("class_sem_target");
    ds.attr_sem.vectors = r.tensor("attr_sem");
    if (ds.bundle.labels.size() != ds.bundle.count() || ds.bundle.split.size() != ds.bundle.count())
        throw DataError("labels/split length does not match sample count");
    return ds;
}

std::vector<std::size_t> indices_of_split(const FeatureBundle& b, Split s) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < b.split.size(); ++i)
        if (b.split[i] == s) out.push_back(i);
    return out;
}

}  // namespace agzsl::data
