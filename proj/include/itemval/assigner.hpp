#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "itemval/accuracy.hpp"
#include "itemval/core.hpp"
#include "itemval/csv.hpp"
#include "itemval/embedding.hpp"
#include "itemval/errors.hpp"
#include "itemval/numfmt.hpp"

namespace itemval {

// Probabilities closer than this are treated as tied. The pipeline never
// breaks ties silently; tied items are flagged and count as incorrect.
inline constexpr double kTieEpsilon = 1e-12;

// Cosine similarity with the result clamped to [-1, 1]; rounding can push
// the raw quotient out of range by ~1e-8 and downstream softmax should never
// see out-of-range similarities. Accumulation is double, index-ascending.
inline double cosine(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size())
        throw InputError("cosine: dimension mismatch " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double x = a[k], y = b[k];
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if (na == 0.0 || nb == 0.0) throw InputError("cosine: zero vector");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

struct SimilarityMatrix {
    std::vector<std::string> item_ids;
    std::vector<double> values; // n x n row-major

    std::size_t size() const { return item_ids.size(); }
    double at(std::size_t i, std::size_t j) const { return values[i * size() + j]; }
};

inline SimilarityMatrix similarity_matrix(const EmbeddingMatrix& e) {
    e.validate();
    const std::size_t n = e.rows();
    if (n < 2) throw InputError("similarity_matrix: need at least 2 items, got " +
                                std::to_string(n));
    SimilarityMatrix s;
    s.item_ids = e.item_ids;
    s.values.resize(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double v = cosine(e.row(i), e.row(j));
            s.values[i * n + j] = v;
            s.values[j * n + i] = v; // cosine is symmetric; fill both halves once
        }
    }
    return s;
}

// means[i][c]: average similarity of item i to the items declared in
// construct c, excluding i itself from its own construct's group.
struct ConstructMeans {
    std::vector<std::string> item_ids;
    std::vector<std::string> construct_ids;
    std::vector<double> means; // n x k row-major

    std::size_t items() const { return item_ids.size(); }
    std::size_t constructs() const { return construct_ids.size(); }
    double at(std::size_t i, std::size_t c) const { return means[i * constructs() + c]; }
};

inline ConstructMeans construct_means(const SimilarityMatrix& s, const Questionnaire& q) {
    const std::size_t n = s.size();
    const std::size_t k = q.constructs.size();
    if (n != q.items.size())
        throw InputError("construct_means: matrix has " + std::to_string(n) + " items, "
                         "questionnaire has " + std::to_string(q.items.size()));

    // map matrix rows onto questionnaire items
    std::vector<std::size_t> declared_of(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto idx = q.item_index(s.item_ids[i]);
        if (!idx)
            throw InputError("construct_means: matrix item '" + s.item_ids[i] +
                             "' is not in the questionnaire");
        declared_of[i] = *q.construct_index(q.items[*idx].declared_construct);
    }

    ConstructMeans cm;
    cm.item_ids = s.item_ids;
    for (const auto& c : q.constructs) cm.construct_ids.push_back(c.id);
    cm.means.resize(n * k);

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < k; ++c) {
            double sum = 0.0;
            std::size_t count = 0;
            for (std::size_t j = 0; j < n; ++j) { // fixed ascending order
                if (j == i || declared_of[j] != c) continue;
                sum += s.at(i, j);
                ++count;
            }
            if (count == 0)
                throw InputError("construct_means: no items to average for item '" +
                                 s.item_ids[i] + "' against construct '" + q.constructs[c].id +
                                 "' (a construct needs at least 2 items for its own members)");
            cm.means[i * k + c] = sum / double(count);
        }
    }
    return cm;
}

// Numerically stable softmax (max subtraction). Temperature only rescales
// the inputs; it never changes the argmax.
inline std::vector<double> softmax(std::span<const double> row, double temperature = 1.0) {
    if (!(temperature > 0.0))
        throw InputError("softmax: temperature must be > 0, got " + format_double(temperature));
    if (row.empty()) throw InputError("softmax: empty input");
    double mx = row[0];
    for (double v : row) {
        if (!std::isfinite(v)) throw InputError("softmax: non-finite input");
        mx = std::max(mx, v);
    }
    std::vector<double> p(row.size());
    double denom = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) {
        p[i] = std::exp((row[i] - mx) / temperature);
        denom += p[i];
    }
    for (auto& v : p) v /= denom;
    return p;
}

struct ConstructAssignment {
    std::string item_id;
    std::vector<double> probabilities; // aligned to questionnaire constructs
    std::optional<std::string> assigned_construct;
    std::string declared_construct;
    bool correct = false;
    bool tie = false;

    std::vector<std::size_t> tied_indices() const {
        std::vector<std::size_t> out;
        double mx = *std::max_element(probabilities.begin(), probabilities.end());
        for (std::size_t c = 0; c < probabilities.size(); ++c)
            if (mx - probabilities[c] <= kTieEpsilon) out.push_back(c);
        return out;
    }
};

// The full unsupervised pipeline: cosine similarity matrix, exclude-self
// per-construct means, softmax, argmax. Rows are matched to questionnaire
// items by id; output follows questionnaire item order.
inline std::vector<ConstructAssignment> assign(const EmbeddingMatrix& e, const Questionnaire& q,
                                               double temperature = 1.0) {
    ValidationReport rep = validate_alignment(q, e);
    if (!rep.ok()) throw InputError("assign: embeddings do not match questionnaire\n" +
                                    rep.summary());

    // reorder rows into questionnaire item order
    EmbeddingMatrix aligned;
    aligned.dim = e.dim;
    for (const auto& item : q.items) {
        for (std::size_t r = 0; r < e.rows(); ++r) {
            if (e.item_ids[r] == item.id) {
                aligned.item_ids.push_back(item.id);
                auto row = e.row(r);
                aligned.data.insert(aligned.data.end(), row.begin(), row.end());
                break;
            }
        }
    }

    const SimilarityMatrix sim = similarity_matrix(aligned);
    const ConstructMeans cm = construct_means(sim, q);
    const std::size_t k = q.constructs.size();

    std::vector<ConstructAssignment> out;
    out.reserve(q.items.size());
    for (std::size_t i = 0; i < q.items.size(); ++i) {
        ConstructAssignment a;
        a.item_id = q.items[i].id;
        a.declared_construct = q.items[i].declared_construct;
        a.probabilities = softmax(std::span<const double>(cm.means.data() + i * k, k),
                                  temperature);
        double mx = *std::max_element(a.probabilities.begin(), a.probabilities.end());
        std::size_t winners = 0, win_idx = 0;
        for (std::size_t c = 0; c < k; ++c) {
            if (mx - a.probabilities[c] <= kTieEpsilon) {
                ++winners;
                win_idx = c;
            }
        }
        if (winners == 1) {
            a.assigned_construct = q.constructs[win_idx].id;
            a.correct = *a.assigned_construct == a.declared_construct;
        } else {
            a.tie = true;
        }
        out.push_back(std::move(a));
    }
    return out;
}

inline AccuracyReport accuracy(const std::vector<ConstructAssignment>& assignments,
                               const Questionnaire& q) {
    std::vector<AssignmentOutcome> outcomes;
    outcomes.reserve(assignments.size());
    for (const auto& a : assignments)
        outcomes.push_back({a.item_id, a.declared_construct, a.assigned_construct, a.tie});
    return compute_accuracy(outcomes, q);
}

inline void write_assignments_csv(std::ostream& out,
                                  const std::vector<ConstructAssignment>& assignments,
                                  const Questionnaire& q) {
    std::vector<std::string> header = {"item_id", "declared", "assigned", "correct", "tie"};
    for (const auto& c : q.constructs) header.push_back("p_" + c.id);
    write_csv_row(out, header);
    for (const auto& a : assignments) {
        std::vector<std::string> row = {a.item_id, a.declared_construct,
                                        a.assigned_construct.value_or("AMBIGUOUS"),
                                        a.correct ? "true" : "false", a.tie ? "true" : "false"};
        for (double p : a.probabilities) row.push_back(format_double(p));
        write_csv_row(out, row);
    }
}

} // namespace itemval
