#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "itemval/accuracy.hpp"
#include "itemval/core.hpp"
#include "itemval/csv.hpp"
#include "itemval/cvr.hpp"
#include "itemval/errors.hpp"
#include "itemval/numfmt.hpp"

namespace itemval {

// Accuracy fraction -> percent with at most one decimal place: integers are
// printed bare ("84"), everything else with a single decimal ("72.5").
inline std::string format_percent(double fraction) {
    const double percent = fraction * 100.0;
    const double rounded = std::round(percent * 10.0) / 10.0;
    char buf[32];
    if (rounded == std::floor(rounded))
        std::snprintf(buf, sizeof buf, "%.0f", rounded);
    else
        std::snprintf(buf, sizeof buf, "%.1f", rounded);
    return buf;
}

struct MethodResult {
    std::string method_name;
    AccuracyReport report;
};

enum class TableFormat { Markdown, Csv };

// One accuracy table per questionnaire: a row per method, a column per
// construct, plus the Total (macro average) column.
class ComparisonTable {
public:
    std::string test_name;
    std::vector<std::string> construct_ids;
    std::vector<MethodResult> methods;

    static ComparisonTable build(std::string test_name, std::vector<MethodResult> methods) {
        if (methods.empty()) throw InputError("comparison table needs at least one method");
        ComparisonTable table;
        table.test_name = std::move(test_name);
        table.construct_ids = methods.front().report.construct_ids;
        const std::set<std::string> reference(table.construct_ids.begin(),
                                              table.construct_ids.end());
        std::set<std::string> names;
        for (auto& m : methods) {
            if (m.method_name.empty()) throw InputError("comparison method has an empty name");
            if (!names.insert(m.method_name).second)
                throw InputError("duplicate method name '" + m.method_name + "'");
            const std::set<std::string> got(m.report.construct_ids.begin(),
                                            m.report.construct_ids.end());
            if (got != reference)
                throw InputError("method '" + m.method_name +
                                 "' covers a different construct set than '" +
                                 methods.front().method_name + "'");
            // Align per-construct values onto the reference column order.
            std::vector<double> aligned(table.construct_ids.size());
            for (std::size_t c = 0; c < table.construct_ids.size(); ++c) {
                const auto it = std::find(m.report.construct_ids.begin(),
                                          m.report.construct_ids.end(), table.construct_ids[c]);
                aligned[c] =
                    m.report.per_construct[static_cast<std::size_t>(
                        it - m.report.construct_ids.begin())];
            }
            m.report.construct_ids = table.construct_ids;
            m.report.per_construct = std::move(aligned);
        }
        table.methods = std::move(methods);
        return table;
    }

    std::string render(TableFormat format) const {
        std::string out;
        if (format == TableFormat::Markdown) {
            out += "| " + test_name + " |";
            for (const auto& c : construct_ids) out += " " + c + " |";
            out += " Total |\n|";
            for (std::size_t i = 0; i < construct_ids.size() + 2; ++i) out += " --- |";
            out += "\n";
            for (const auto& m : methods) {
                out += "| " + m.method_name + " |";
                for (double v : m.report.per_construct) out += " " + format_percent(v) + "% |";
                out += " " + format_percent(m.report.macro) + "% |\n";
            }
            return out;
        }
        std::vector<std::string> header{test_name};
        header.insert(header.end(), construct_ids.begin(), construct_ids.end());
        header.push_back("Total");
        out += write_csv_row(header);
        for (const auto& m : methods) {
            std::vector<std::string> row{m.method_name};
            for (double v : m.report.per_construct) row.push_back(format_percent(v));
            row.push_back(format_percent(m.report.macro));
            out += write_csv_row(row);
        }
        return out;
    }
};

// ---------------------------------------------------------------------------
// Radar chart data: one spoke per construct, in report order.

inline nlohmann::ordered_json radar_json(const AccuracyReport& report) {
    nlohmann::ordered_json spokes = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < report.construct_ids.size(); ++c) {
        nlohmann::ordered_json spoke;
        spoke["construct"] = report.construct_ids[c];
        spoke["accuracy"] = report.per_construct[c];
        spokes.push_back(std::move(spoke));
    }
    return spokes;
}

namespace detail {

inline std::string svg_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

} // namespace detail

// Minimal standalone radar SVG: reference rings, one spoke per construct,
// the accuracy polygon, construct labels.
inline std::string radar_svg(const AccuracyReport& report) {
    const std::size_t k = report.construct_ids.size();
    if (k < 2) throw InputError("radar chart needs at least two constructs");
    const double cx = 220.0, cy = 220.0, radius = 160.0;
    const double pi = 3.14159265358979323846;
    auto point = [&](std::size_t i, double r) {
        const double angle = -pi / 2.0 + 2.0 * pi * static_cast<double>(i) / static_cast<double>(k);
        return std::make_pair(cx + r * std::cos(angle), cy + r * std::sin(angle));
    };
    std::string svg =
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"440\" height=\"440\" "
        "viewBox=\"0 0 440 440\">\n";
    for (double ring : {0.25, 0.5, 0.75, 1.0}) {
        svg += "  <circle cx=\"" + detail::svg_num(cx) + "\" cy=\"" + detail::svg_num(cy) +
               "\" r=\"" + detail::svg_num(radius * ring) +
               "\" fill=\"none\" stroke=\"#cccccc\"/>\n";
    }
    for (std::size_t i = 0; i < k; ++i) {
        const auto [x, y] = point(i, radius);
        svg += "  <line x1=\"" + detail::svg_num(cx) + "\" y1=\"" + detail::svg_num(cy) +
               "\" x2=\"" + detail::svg_num(x) + "\" y2=\"" + detail::svg_num(y) +
               "\" stroke=\"#999999\"/>\n";
    }
    svg += "  <polygon points=\"";
    for (std::size_t i = 0; i < k; ++i) {
        const auto [x, y] = point(i, radius * report.per_construct[i]);
        if (i) svg += ' ';
        svg += detail::svg_num(x) + "," + detail::svg_num(y);
    }
    svg += "\" fill=\"#4477aa55\" stroke=\"#4477aa\" stroke-width=\"2\"/>\n";
    for (std::size_t i = 0; i < k; ++i) {
        const auto [x, y] = point(i, radius * 1.12);
        svg += "  <text x=\"" + detail::svg_num(x) + "\" y=\"" + detail::svg_num(y) +
               "\" font-size=\"13\" text-anchor=\"middle\">" + report.construct_ids[i] +
               "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

// ---------------------------------------------------------------------------
// Item-level assignment grid: rows are constructs, columns are items grouped
// by declared construct. Cells: 1 assigned there, 0 not, T tied there.

struct GridEntry {
    std::string item_id;
    std::string declared;
    std::optional<std::string> assigned;
    std::vector<std::string> tied; // constructs sharing the top score when tied
};

inline std::vector<GridEntry> grid_entries(const std::vector<ConstructAssignment>& assignments,
                                           const Questionnaire& q) {
    std::vector<GridEntry> entries;
    entries.reserve(assignments.size());
    for (const auto& a : assignments) {
        GridEntry e;
        e.item_id = a.item_id;
        e.declared = a.declared_construct;
        e.assigned = a.assigned_construct;
        if (a.tie)
            for (std::size_t idx : a.tied_indices()) e.tied.push_back(q.constructs[idx].id);
        entries.push_back(std::move(e));
    }
    return entries;
}

inline std::vector<GridEntry> grid_entries(const std::vector<PanelAssignment>& assignments,
                                           const Questionnaire& q) {
    std::vector<GridEntry> entries;
    entries.reserve(assignments.size());
    for (const auto& a : assignments) {
        GridEntry e;
        e.item_id = a.item_id;
        const auto idx = q.item_index(a.item_id);
        if (!idx) throw InputError("grid: unknown item '" + a.item_id + "'");
        e.declared = q.items[*idx].declared_construct;
        e.assigned = a.assigned_construct;
        if (a.tie) {
            const int top = *std::max_element(a.vote_counts.begin(), a.vote_counts.end());
            for (std::size_t c = 0; c < a.vote_counts.size(); ++c)
                if (a.vote_counts[c] == top) e.tied.push_back(q.constructs[c].id);
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

inline std::string assignment_grid_csv(const std::vector<GridEntry>& entries,
                                       const Questionnaire& q) {
    std::map<std::string, const GridEntry*> by_item;
    for (const auto& e : entries) {
        if (!by_item.emplace(e.item_id, &e).second)
            throw InputError("grid: duplicate item '" + e.item_id + "'");
        if (!q.item_index(e.item_id))
            throw InputError("grid: unknown item '" + e.item_id + "'");
    }
    // Columns: items grouped by declared construct, questionnaire order within.
    std::vector<const Item*> columns;
    for (const auto& c : q.constructs)
        for (const auto& item : q.items)
            if (item.declared_construct == c.id && by_item.count(item.id))
                columns.push_back(&item);

    std::vector<std::string> header{"construct"};
    for (const auto* item : columns) header.push_back(item->id);
    std::string out = write_csv_row(header);
    for (const auto& c : q.constructs) {
        std::vector<std::string> row{c.id};
        for (const auto* item : columns) {
            const GridEntry& e = *by_item.at(item->id);
            if (e.tied.size() > 1 &&
                std::find(e.tied.begin(), e.tied.end(), c.id) != e.tied.end())
                row.push_back("T");
            else if (e.assigned && *e.assigned == c.id)
                row.push_back("1");
            else
                row.push_back("0");
        }
        out += write_csv_row(row);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Method agreement on shared items.

struct ItemAssignment {
    std::string item_id;
    std::optional<std::string> assigned; // nullopt = AMBIGUOUS
};

struct AgreementReport {
    double observed = 0.0;
    std::size_t items = 0;
    std::size_t matches = 0;
    std::vector<std::string> disagreements; // item ids, sorted

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json doc;
        doc["items"] = items;
        doc["matches"] = matches;
        doc["observed_agreement"] = observed;
        doc["disagreements"] = disagreements;
        return doc;
    }
};

inline AgreementReport agreement(const std::vector<ItemAssignment>& a,
                                 const std::vector<ItemAssignment>& b) {
    std::map<std::string, std::optional<std::string>> left, right;
    for (const auto& x : a)
        if (!left.emplace(x.item_id, x.assigned).second)
            throw InputError("agreement: duplicate item '" + x.item_id + "' in first input");
    for (const auto& x : b)
        if (!right.emplace(x.item_id, x.assigned).second)
            throw InputError("agreement: duplicate item '" + x.item_id + "' in second input");
    if (left.size() != right.size() ||
        !std::equal(left.begin(), left.end(), right.begin(),
                    [](const auto& p, const auto& r) { return p.first == r.first; })) {
        std::string missing;
        for (const auto& [id, _] : left)
            if (!right.count(id)) {
                missing = id;
                break;
            }
        if (missing.empty())
            for (const auto& [id, _] : right)
                if (!left.count(id)) {
                    missing = id;
                    break;
                }
        throw InputError("agreement: inputs cover different item sets (e.g. '" + missing + "')");
    }
    AgreementReport rep;
    rep.items = left.size();
    if (rep.items == 0) throw InputError("agreement: no items to compare");
    for (const auto& [id, assigned] : left) {
        if (assigned == right.at(id))
            rep.matches++;
        else
            rep.disagreements.push_back(id);
    }
    rep.observed = static_cast<double>(rep.matches) / static_cast<double>(rep.items);
    return rep;
}

// Reads item-level assignments back from the CSVs this tool writes
// (item_id,declared,assigned,correct,tie,...).
inline std::vector<ItemAssignment> read_assignments_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open assignments file: " + path);
    CsvReader reader(in, path);
    std::vector<std::string> row;
    if (!reader.next(row) || row.size() < 5 || row[0] != "item_id" || row[1] != "declared" ||
        row[2] != "assigned")
        throw InputError(path + ": expected an assignments CSV header (item_id,declared,assigned,...)");
    std::vector<ItemAssignment> out;
    while (reader.next(row)) {
        if (row.size() == 1 && row[0].empty()) continue;
        if (row.size() < 5)
            throw InputError(path + ":" + std::to_string(reader.line()) + ": truncated row");
        ItemAssignment a;
        a.item_id = row[0];
        if (row[2] != "AMBIGUOUS") a.assigned = row[2];
        out.push_back(std::move(a));
    }
    if (out.empty()) throw InputError(path + ": no assignment rows");
    return out;
}

} // namespace itemval
