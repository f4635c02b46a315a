#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "itemval/core.hpp"
#include "itemval/errors.hpp"

namespace itemval {

// One judged item: its declared construct and what some method assigned.
// assigned is empty when the method tied (AMBIGUOUS); ties count as incorrect.
struct AssignmentOutcome {
    std::string item_id;
    std::string declared;
    std::optional<std::string> assigned;
    bool tie = false;
};

// Per-construct and total accuracy of an item->construct assignment method.
// macro is the mean of the per-construct accuracies (the headline "total");
// micro is total correct / total items. The two coincide on balanced designs.
//
// confusion[d][a] counts non-tied items declared d and assigned a; tied items
// are tallied separately in ties_by_declared, so for every declared construct
// row_sum(confusion[d]) + ties_by_declared[d] == declared_counts[d].
struct AccuracyReport {
    std::vector<std::string> construct_ids;
    std::vector<double> per_construct;
    double macro = 0.0;
    std::optional<double> micro;
    std::vector<std::vector<int>> confusion;
    std::vector<int> ties_by_declared;
    std::vector<int> declared_counts;
    std::vector<int> correct_counts;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json doc;
        doc["constructs"] = construct_ids;
        nlohmann::ordered_json pc = nlohmann::ordered_json::object();
        for (std::size_t i = 0; i < construct_ids.size(); ++i)
            pc[construct_ids[i]] = per_construct[i];
        doc["per_construct"] = pc;
        doc["macro"] = macro;
        if (micro) doc["micro"] = *micro;
        if (!declared_counts.empty()) {
            nlohmann::ordered_json counts = nlohmann::ordered_json::object();
            for (std::size_t i = 0; i < construct_ids.size(); ++i)
                counts[construct_ids[i]] = {{"correct", correct_counts[i]},
                                            {"total", declared_counts[i]}};
            doc["counts"] = counts;
        }
        if (!confusion.empty()) doc["confusion"] = confusion;
        if (!ties_by_declared.empty()) doc["ties"] = ties_by_declared;
        return doc;
    }

    static AccuracyReport from_json(const nlohmann::json& doc, const std::string& source) {
        if (!doc.is_object() || !doc.contains("constructs") || !doc.contains("per_construct"))
            throw InputError(source + ": accuracy JSON needs 'constructs' and 'per_construct'");
        AccuracyReport r;
        for (const auto& c : doc["constructs"]) r.construct_ids.push_back(c.get<std::string>());
        for (const auto& cid : r.construct_ids) {
            if (!doc["per_construct"].contains(cid))
                throw InputError(source + ": per_construct missing '" + cid + "'");
            r.per_construct.push_back(doc["per_construct"][cid].get<double>());
        }
        if (doc.contains("macro")) {
            r.macro = doc["macro"].get<double>();
        } else {
            double s = 0;
            for (double v : r.per_construct) s += v;
            r.macro = r.per_construct.empty() ? 0.0 : s / double(r.per_construct.size());
        }
        if (doc.contains("micro")) r.micro = doc["micro"].get<double>();
        if (doc.contains("confusion"))
            r.confusion = doc["confusion"].get<std::vector<std::vector<int>>>();
        if (doc.contains("ties")) r.ties_by_declared = doc["ties"].get<std::vector<int>>();
        if (doc.contains("counts")) {
            for (const auto& cid : r.construct_ids) {
                const auto& c = doc["counts"][cid];
                r.correct_counts.push_back(c["correct"].get<int>());
                r.declared_counts.push_back(c["total"].get<int>());
            }
        }
        return r;
    }
};

// Builds per-construct percentages only; used when a method's row comes from
// published numbers rather than per-item assignments. micro is left unset
// since it is not derivable without item counts.
inline AccuracyReport accuracy_from_fractions(const std::vector<std::string>& construct_ids,
                                              const std::vector<double>& fractions) {
    if (construct_ids.size() != fractions.size())
        throw InputError("accuracy_from_fractions: size mismatch");
    AccuracyReport r;
    r.construct_ids = construct_ids;
    r.per_construct = fractions;
    double s = 0;
    for (double v : fractions) s += v;
    r.macro = fractions.empty() ? 0.0 : s / double(fractions.size());
    return r;
}

inline AccuracyReport compute_accuracy(const std::vector<AssignmentOutcome>& outcomes,
                                       const Questionnaire& q) {
    const std::size_t k = q.constructs.size();
    AccuracyReport r;
    for (const auto& c : q.constructs) r.construct_ids.push_back(c.id);
    r.confusion.assign(k, std::vector<int>(k, 0));
    r.ties_by_declared.assign(k, 0);
    r.declared_counts.assign(k, 0);
    r.correct_counts.assign(k, 0);

    std::size_t total_correct = 0;
    for (const auto& o : outcomes) {
        auto d = q.construct_index(o.declared);
        if (!d) throw InputError("accuracy: unknown declared construct '" + o.declared + "'");
        r.declared_counts[*d]++;
        if (o.tie || !o.assigned) {
            r.ties_by_declared[*d]++;
            continue;
        }
        auto a = q.construct_index(*o.assigned);
        if (!a) throw InputError("accuracy: unknown assigned construct '" + *o.assigned + "'");
        r.confusion[*d][*a]++;
        if (*a == *d) {
            r.correct_counts[*d]++;
            ++total_correct;
        }
    }

    r.per_construct.resize(k);
    double macro_sum = 0;
    for (std::size_t c = 0; c < k; ++c) {
        if (r.declared_counts[c] == 0)
            throw InputError("accuracy: construct '" + q.constructs[c].id + "' has no items");
        r.per_construct[c] = double(r.correct_counts[c]) / double(r.declared_counts[c]);
        macro_sum += r.per_construct[c];
    }
    r.macro = macro_sum / double(k);
    r.micro = outcomes.empty() ? 0.0 : double(total_correct) / double(outcomes.size());
    return r;
}

} // namespace itemval
