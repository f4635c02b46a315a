#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "itemval/assigner.hpp"
#include "itemval/core.hpp"
#include "itemval/embedding.hpp"
#include "itemval/errors.hpp"

namespace itemval {

struct SynthSpec {
    std::size_t constructs = 5;
    std::size_t items_per_construct = 10;
    std::size_t dim = 768;
    double sigma = 0.0;             // per-coordinate noise around the centroid
    std::uint64_t seed = 0;
    double max_centroid_cosine = 0.3; // separation bound between centroids
    std::size_t max_attempts = 1000;  // per centroid, before giving up
};

struct SynthResult {
    Questionnaire questionnaire;
    EmbeddingMatrix embeddings;
};

namespace detail {

inline std::vector<double> sample_unit_vector(std::mt19937_64& rng,
                                              std::normal_distribution<double>& gauss,
                                              std::size_t dim) {
    std::vector<double> v(dim);
    double norm_sq = 0.0;
    do {
        norm_sq = 0.0;
        for (auto& x : v) {
            x = gauss(rng);
            norm_sq += x * x;
        }
    } while (norm_sq == 0.0);
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (auto& x : v) x *= inv;
    return v;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

} // namespace detail

// Ground-truth benchmark: one unit centroid per construct (pairwise cosine
// kept below the separation bound by rejection sampling), items drawn as
// centroid plus isotropic gaussian noise. Everything is driven by a single
// seeded generator, so a given spec always produces the same bytes.
inline SynthResult synthesize(const SynthSpec& spec) {
    if (spec.constructs < 2) throw InputError("synth: need at least 2 constructs");
    if (spec.items_per_construct < 1) throw InputError("synth: need at least 1 item per construct");
    if (spec.dim < 2) throw InputError("synth: dimension must be at least 2");
    if (spec.sigma < 0.0 || !std::isfinite(spec.sigma))
        throw InputError("synth: sigma must be finite and non-negative");

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<std::vector<double>> centroids;
    centroids.reserve(spec.constructs);
    for (std::size_t k = 0; k < spec.constructs; ++k) {
        bool placed = false;
        for (std::size_t attempt = 0; attempt < spec.max_attempts && !placed; ++attempt) {
            auto candidate = detail::sample_unit_vector(rng, gauss, spec.dim);
            placed = true;
            for (const auto& c : centroids)
                if (detail::dot(candidate, c) >= spec.max_centroid_cosine) {
                    placed = false;
                    break;
                }
            if (placed) centroids.push_back(std::move(candidate));
        }
        if (!placed)
            throw RuntimeFailure("synth: could not place centroid " + std::to_string(k + 1) +
                                 " with pairwise cosine below " +
                                 std::to_string(spec.max_centroid_cosine) + " after " +
                                 std::to_string(spec.max_attempts) + " attempts");
    }

    SynthResult out;
    out.questionnaire.name = "synthetic";
    for (std::size_t k = 0; k < spec.constructs; ++k)
        out.questionnaire.constructs.push_back(
            {"c" + std::to_string(k + 1), "Construct " + std::to_string(k + 1)});

    std::vector<float> row(spec.dim);
    for (std::size_t k = 0; k < spec.constructs; ++k) {
        const std::string cid = out.questionnaire.constructs[k].id;
        for (std::size_t j = 0; j < spec.items_per_construct; ++j) {
            const std::string item_id = cid + "_i" + std::to_string(j + 1);
            out.questionnaire.items.push_back(
                {item_id, "synthetic item " + std::to_string(j + 1) + " for " + cid, cid, "syn"});
            for (std::size_t d = 0; d < spec.dim; ++d)
                row[d] = static_cast<float>(centroids[k][d] + spec.sigma * gauss(rng));
            out.embeddings.append_row(item_id, row);
        }
    }
    out.questionnaire.validate();
    out.embeddings.validate();
    return out;
}

} // namespace itemval
