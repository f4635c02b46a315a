#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "itemval/accuracy.hpp"
#include "itemval/core.hpp"
#include "itemval/csv.hpp"
#include "itemval/errors.hpp"
#include "itemval/numfmt.hpp"

namespace itemval {

// CVR = (n_e - N/2) / (N/2), where n_e is the number of experts rating the
// item essential (value 2) and N the panel size. Range [-1, 1].
inline double compute_cvr(int n_essential, int panel_size) {
    if (panel_size < 1)
        throw InputError("compute_cvr: panel size must be >= 1, got " +
                         std::to_string(panel_size));
    if (n_essential < 0 || n_essential > panel_size)
        throw InputError("compute_cvr: n_e " + std::to_string(n_essential) +
                         " outside [0, " + std::to_string(panel_size) + "]");
    const double half = double(panel_size) / 2.0;
    return (double(n_essential) - half) / half;
}

struct CvrResult {
    std::string item_id;
    std::string construct_id;
    int n_essential = 0;
    int panel_size = 0;
    double cvr = 0.0;
    bool passes = false;
};

// Minimum CVR critical values per panel size. Not derived here: values are
// loaded from an editable JSON config so they can be audited and replaced.
class ThresholdTable {
public:
    static ThresholdTable from_json(const nlohmann::json& doc, const std::string& source) {
        if (!doc.is_object())
            throw InputError(source + ": threshold table must be a JSON object");
        ThresholdTable t;
        for (const auto& [key, value] : doc.items()) {
            int n = static_cast<int>(parse_int(key, source));
            if (n < 1) throw InputError(source + ": panel size must be positive: " + key);
            if (!value.is_number())
                throw InputError(source + ": threshold for N=" + key + " is not a number");
            t.min_cvr_[n] = value.get<double>();
        }
        t.validate(source);
        return t;
    }

    static ThresholdTable load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw InputError("cannot open threshold table: " + path);
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw InputError(path + ": invalid JSON: " + e.what());
        }
        return from_json(doc, path);
    }

    std::optional<double> lookup(int panel_size) const {
        auto it = min_cvr_.find(panel_size);
        if (it == min_cvr_.end()) return std::nullopt;
        return it->second;
    }

    bool empty() const { return min_cvr_.empty(); }

private:
    void validate(const std::string& source) const {
        double prev = 1.0;
        int prev_n = 0;
        for (const auto& [n, v] : min_cvr_) {
            if (v <= 0.0 || v > 1.0)
                throw InputError(source + ": threshold for N=" + std::to_string(n) +
                                 " must be in (0, 1], got " + format_double(v));
            if (prev_n != 0 && v > prev)
                throw InputError(source + ": thresholds must be non-increasing in N (N=" +
                                 std::to_string(n) + " rises above N=" + std::to_string(prev_n) +
                                 ")");
            prev = v;
            prev_n = n;
        }
    }

    std::map<int, double> min_cvr_;
};

inline CvrResult item_cvr(const RatingSet& ratings, const Questionnaire& q,
                          const std::string& item_id, const std::string& construct_id) {
    if (!q.item_index(item_id)) throw InputError("item_cvr: unknown item id '" + item_id + "'");
    if (!q.construct_index(construct_id))
        throw InputError("item_cvr: unknown construct id '" + construct_id + "'");
    CvrResult r;
    r.item_id = item_id;
    r.construct_id = construct_id;
    r.panel_size = static_cast<int>(ratings.panel_size());
    for (const auto& expert : ratings.experts) {
        auto v = ratings.value_at(expert, item_id, construct_id);
        if (!v)
            throw InputError("item_cvr: missing rating cell (" + expert + ", " + item_id + ", " +
                             construct_id + ") and sparse mode is off");
        if (*v == 2) r.n_essential++;
    }
    r.cvr = compute_cvr(r.n_essential, r.panel_size);
    return r;
}

// CVR for every (item, construct) cell, items in questionnaire order.
inline std::vector<CvrResult> all_cvr(const RatingSet& ratings, const Questionnaire& q) {
    std::vector<CvrResult> out;
    out.reserve(q.items.size() * q.constructs.size());
    for (const auto& it : q.items)
        for (const auto& c : q.constructs) out.push_back(item_cvr(ratings, q, it.id, c.id));
    return out;
}

struct ScreenResult {
    std::vector<CvrResult> retained;
    std::vector<CvrResult> rejected;
};

// Retains results whose CVR meets or exceeds the critical value for their
// panel size. An explicit override wins over the table.
inline ScreenResult screen(std::vector<CvrResult> results, const ThresholdTable& thresholds,
                           std::optional<double> override_threshold = std::nullopt) {
    ScreenResult out;
    for (auto& r : results) {
        double threshold;
        if (override_threshold) {
            threshold = *override_threshold;
        } else {
            auto t = thresholds.lookup(r.panel_size);
            if (!t)
                throw InputError("screen: no threshold for panel size " +
                                 std::to_string(r.panel_size) +
                                 " and no --threshold override given");
            threshold = *t;
        }
        r.passes = r.cvr >= threshold;
        (r.passes ? out.retained : out.rejected).push_back(r);
    }
    return out;
}

inline void write_cvr_csv(std::ostream& out, const std::vector<CvrResult>& results) {
    write_csv_row(out, {"item_id", "construct_id", "n_e", "N", "cvr", "passes"});
    for (const auto& r : results)
        write_csv_row(out, {r.item_id, r.construct_id, std::to_string(r.n_essential),
                            std::to_string(r.panel_size), format_double(r.cvr),
                            r.passes ? "true" : "false"});
}

// ---------------------------------------------------------------------------
// Panel assignment: each item goes to the construct with the most positive
// expert ratings. "Positive" is configurable: ge1 counts 1s and 2s, eq2 only
// essential ratings.

enum class PositiveRule { Ge1, Eq2 };

inline PositiveRule parse_positive_rule(const std::string& s) {
    if (s == "ge1") return PositiveRule::Ge1;
    if (s == "eq2") return PositiveRule::Eq2;
    throw InputError("unknown positive rule '" + s + "' (expected ge1 or eq2)");
}

struct PanelAssignment {
    std::string item_id;
    std::optional<std::string> assigned_construct; // nullopt when tied
    std::vector<int> vote_counts;                  // aligned to questionnaire constructs
    bool tie = false;
};

inline std::vector<PanelAssignment> panel_assign(const RatingSet& ratings, const Questionnaire& q,
                                                 PositiveRule rule = PositiveRule::Ge1) {
    std::vector<PanelAssignment> out;
    out.reserve(q.items.size());
    for (const auto& item : q.items) {
        PanelAssignment pa;
        pa.item_id = item.id;
        pa.vote_counts.assign(q.constructs.size(), 0);
        for (std::size_t c = 0; c < q.constructs.size(); ++c) {
            for (const auto& expert : ratings.experts) {
                auto v = ratings.value_at(expert, item.id, q.constructs[c].id);
                if (!v)
                    throw InputError("panel_assign: missing rating cell (" + expert + ", " +
                                     item.id + ", " + q.constructs[c].id + ")");
                bool positive = rule == PositiveRule::Ge1 ? *v >= 1 : *v == 2;
                if (positive) pa.vote_counts[c]++;
            }
        }
        int best = *std::max_element(pa.vote_counts.begin(), pa.vote_counts.end());
        int winners = static_cast<int>(
            std::count(pa.vote_counts.begin(), pa.vote_counts.end(), best));
        if (winners == 1) {
            std::size_t idx = static_cast<std::size_t>(
                std::max_element(pa.vote_counts.begin(), pa.vote_counts.end()) -
                pa.vote_counts.begin());
            pa.assigned_construct = q.constructs[idx].id;
        } else {
            pa.tie = true; // ties are data, not errors
        }
        out.push_back(std::move(pa));
    }
    return out;
}

inline AccuracyReport panel_accuracy(const std::vector<PanelAssignment>& assignments,
                                     const Questionnaire& q) {
    std::vector<AssignmentOutcome> outcomes;
    outcomes.reserve(assignments.size());
    for (const auto& a : assignments) {
        auto idx = q.item_index(a.item_id);
        if (!idx) throw InputError("panel_accuracy: unknown item '" + a.item_id + "'");
        outcomes.push_back({a.item_id, q.items[*idx].declared_construct, a.assigned_construct,
                            a.tie});
    }
    return compute_accuracy(outcomes, q);
}

inline void write_panel_assignments_csv(std::ostream& out,
                                        const std::vector<PanelAssignment>& assignments,
                                        const Questionnaire& q) {
    std::vector<std::string> header = {"item_id", "declared", "assigned", "correct", "tie"};
    for (const auto& c : q.constructs) header.push_back("votes_" + c.id);
    write_csv_row(out, header);
    for (const auto& a : assignments) {
        const auto& declared = q.items[*q.item_index(a.item_id)].declared_construct;
        bool correct = !a.tie && a.assigned_construct && *a.assigned_construct == declared;
        std::vector<std::string> row = {a.item_id, declared,
                                        a.assigned_construct.value_or("AMBIGUOUS"),
                                        correct ? "true" : "false", a.tie ? "true" : "false"};
        for (int v : a.vote_counts) row.push_back(std::to_string(v));
        write_csv_row(out, row);
    }
}

} // namespace itemval
