#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "itemval/csv.hpp"
#include "itemval/embedding.hpp"
#include "itemval/errors.hpp"

namespace itemval {

struct Construct {
    std::string id;
    std::string label;
    bool operator==(const Construct&) const = default;
};

struct Item {
    std::string id;
    std::string text;
    std::string declared_construct;
    std::string language; // IETF tag, informational only
    bool operator==(const Item&) const = default;
};

class Questionnaire {
public:
    std::string name;
    std::vector<Construct> constructs;
    std::vector<Item> items;

    bool operator==(const Questionnaire&) const = default;

    std::optional<std::size_t> construct_index(const std::string& id) const {
        for (std::size_t i = 0; i < constructs.size(); ++i)
            if (constructs[i].id == id) return i;
        return std::nullopt;
    }

    std::optional<std::size_t> item_index(const std::string& id) const {
        auto it = item_idx_.find(id);
        if (it == item_idx_.end()) return std::nullopt;
        return it->second;
    }

    std::vector<std::size_t> items_of_construct(std::size_t construct_idx) const {
        std::vector<std::size_t> out;
        const auto& cid = constructs[construct_idx].id;
        for (std::size_t i = 0; i < items.size(); ++i)
            if (items[i].declared_construct == cid) out.push_back(i);
        return out;
    }

    // Checks structural invariants; throws InputError naming the offender.
    void validate() {
        if (items.empty()) throw InputError(name + ": questionnaire has no items");
        if (constructs.size() < 2)
            throw InputError(name + ": a questionnaire needs at least 2 constructs, got " +
                             std::to_string(constructs.size()));
        std::set<std::string> cids;
        for (const auto& c : constructs) {
            if (c.id.empty()) throw InputError(name + ": construct with empty id");
            if (!cids.insert(c.id).second)
                throw InputError(name + ": duplicate construct id '" + c.id + "'");
        }
        item_idx_.clear();
        std::map<std::string, int> per_construct;
        for (std::size_t i = 0; i < items.size(); ++i) {
            const auto& it = items[i];
            if (it.id.empty()) throw InputError(name + ": item with empty id");
            if (it.text.empty()) throw InputError(name + ": item '" + it.id + "' has empty text");
            if (!item_idx_.emplace(it.id, i).second)
                throw InputError(name + ": duplicate item id '" + it.id + "'");
            if (!cids.count(it.declared_construct))
                throw InputError(name + ": item '" + it.id + "' references unknown construct '" +
                                 it.declared_construct + "'");
            per_construct[it.declared_construct]++;
        }
        for (const auto& c : constructs)
            if (per_construct[c.id] == 0)
                throw InputError(name + ": construct '" + c.id + "' has no items");
    }

private:
    std::unordered_map<std::string, std::size_t> item_idx_;
};

// ---------------------------------------------------------------------------
// Questionnaire parsing. JSON is the canonical format; the CSV importer is a
// convenience for spreadsheet-shaped item lists.

inline Questionnaire parse_questionnaire_json(std::istream& in, const std::string& source) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(source + ": invalid JSON: " + e.what());
    }
    if (!doc.is_object() || !doc.contains("constructs") || !doc.contains("items"))
        throw InputError(source + ": expected {name, constructs, items}");
    Questionnaire q;
    q.name = doc.value("name", source);
    for (const auto& c : doc["constructs"]) {
        if (!c.is_object() || !c.contains("id"))
            throw InputError(source + ": construct entries need an 'id'");
        Construct con;
        con.id = c["id"].get<std::string>();
        con.label = c.value("label", con.id);
        q.constructs.push_back(std::move(con));
    }
    for (const auto& j : doc["items"]) {
        if (!j.is_object() || !j.contains("id") || !j.contains("text") || !j.contains("construct"))
            throw InputError(source + ": item entries need 'id', 'text' and 'construct'");
        Item it;
        it.id = j["id"].get<std::string>();
        it.text = j["text"].get<std::string>();
        it.declared_construct = j["construct"].get<std::string>();
        it.language = j.value("language", "");
        q.items.push_back(std::move(it));
    }
    q.validate();
    return q;
}

// CSV importer. Constructs are declared in manifest lines ahead of the data:
//   #name,My questionnaire
//   #construct,<id>[,<label>]
//   item_id,text,construct,language
//   q1,"Some item text",extraversion,en
inline Questionnaire parse_questionnaire_csv(std::istream& in, const std::string& source) {
    Questionnaire q;
    q.name = source;
    CsvReader reader(in, source);
    std::vector<std::string> row;
    bool header_seen = false;
    while (reader.next(row)) {
        if (row.empty() || (row.size() == 1 && row[0].empty())) continue;
        const std::string where = source + ":" + std::to_string(reader.line());
        if (row[0] == "#name") {
            if (row.size() < 2) throw InputError(where + ": #name line needs a value");
            q.name = row[1];
            continue;
        }
        if (row[0] == "#construct") {
            if (row.size() < 2) throw InputError(where + ": #construct line needs an id");
            Construct c;
            c.id = row[1];
            c.label = row.size() > 2 && !row[2].empty() ? row[2] : row[1];
            q.constructs.push_back(std::move(c));
            continue;
        }
        if (!header_seen) {
            if (row.size() < 3 || row[0] != "item_id" || row[1] != "text" || row[2] != "construct")
                throw InputError(where + ": expected header item_id,text,construct,language");
            header_seen = true;
            continue;
        }
        if (row.size() < 3)
            throw InputError(where + ": item row needs item_id,text,construct");
        Item it;
        it.id = row[0];
        it.text = row[1];
        it.declared_construct = row[2];
        it.language = row.size() > 3 ? row[3] : "";
        q.items.push_back(std::move(it));
    }
    if (!header_seen) throw InputError(source + ": no item_id,text,construct,language header found");
    q.validate();
    return q;
}

inline Questionnaire parse_questionnaire(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open questionnaire file: " + path);
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv")
        return parse_questionnaire_csv(in, path);
    return parse_questionnaire_json(in, path);
}

inline std::string serialize_questionnaire(const Questionnaire& q) {
    nlohmann::ordered_json doc;
    doc["name"] = q.name;
    doc["constructs"] = nlohmann::ordered_json::array();
    for (const auto& c : q.constructs)
        doc["constructs"].push_back({{"id", c.id}, {"label", c.label}});
    doc["items"] = nlohmann::ordered_json::array();
    for (const auto& it : q.items)
        doc["items"].push_back({{"id", it.id},
                                {"text", it.text},
                                {"construct", it.declared_construct},
                                {"language", it.language}});
    return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Expert ratings. One record per (expert, item, construct) cell on the
// 3-point scale: 0 not useful, 1 useful but not essential, 2 essential.

struct Rating {
    std::string expert_id;
    std::string item_id;
    std::string construct_id;
    int value = 0;
};

class RatingSet {
public:
    std::vector<Rating> ratings;
    std::vector<std::string> experts; // sorted, distinct
    bool allow_sparse = false;

    std::size_t panel_size() const { return experts.size(); }

    // Missing cells read as 0 when sparse mode was allowed at parse time.
    std::optional<int> value_at(const std::string& expert, const std::string& item,
                                const std::string& construct) const {
        auto it = cells_.find(key(expert, item, construct));
        if (it == cells_.end()) return allow_sparse ? std::optional<int>(0) : std::nullopt;
        return ratings[it->second].value;
    }

    bool has_cell(const std::string& expert, const std::string& item,
                  const std::string& construct) const {
        return cells_.count(key(expert, item, construct)) > 0;
    }

    void index() {
        cells_.clear();
        std::set<std::string> expert_set;
        for (std::size_t i = 0; i < ratings.size(); ++i) {
            const auto& r = ratings[i];
            if (!cells_.emplace(key(r.expert_id, r.item_id, r.construct_id), i).second)
                throw InputError("duplicate rating cell (" + r.expert_id + ", " + r.item_id +
                                 ", " + r.construct_id + ")");
            expert_set.insert(r.expert_id);
        }
        experts.assign(expert_set.begin(), expert_set.end());
    }

private:
    static std::string key(const std::string& e, const std::string& i, const std::string& c) {
        return e + '\x1f' + i + '\x1f' + c;
    }
    std::unordered_map<std::string, std::size_t> cells_;
};

// Ratings CSV: header expert_id,item_id,construct_id,value.
// Unless allow_sparse is set, every (expert, item, construct) cell must be
// present; sparse mode treats missing cells as 0 ("not useful").
inline RatingSet parse_ratings(std::istream& in, const Questionnaire& q,
                               const std::string& source, bool allow_sparse = false) {
    CsvReader reader(in, source);
    std::vector<std::string> row;
    if (!reader.next(row) || row.size() < 4 || row[0] != "expert_id" || row[1] != "item_id" ||
        row[2] != "construct_id" || row[3] != "value")
        throw InputError(source + ": expected header expert_id,item_id,construct_id,value");

    RatingSet rs;
    rs.allow_sparse = allow_sparse;
    while (reader.next(row)) {
        if (row.size() == 1 && row[0].empty()) continue;
        const std::string where = source + ":" + std::to_string(reader.line());
        if (row.size() < 4) throw InputError(where + ": rating row needs 4 fields");
        Rating r;
        r.expert_id = row[0];
        r.item_id = row[1];
        r.construct_id = row[2];
        long v = parse_int(row[3], where);
        if (v < 0 || v > 2)
            throw InputError(where + ": rating out of scale, value " + row[3] +
                             " for item '" + r.item_id + "' (expected 0, 1 or 2)");
        r.value = static_cast<int>(v);
        if (!q.item_index(r.item_id))
            throw InputError(where + ": unknown item id '" + r.item_id + "'");
        if (!q.construct_index(r.construct_id))
            throw InputError(where + ": unknown construct id '" + r.construct_id + "'");
        rs.ratings.push_back(std::move(r));
    }
    rs.index();
    if (rs.panel_size() == 0) throw InputError(source + ": no ratings found, panel is empty");

    if (!allow_sparse) {
        std::vector<std::string> missing;
        for (const auto& e : rs.experts)
            for (const auto& it : q.items)
                for (const auto& c : q.constructs)
                    if (!rs.has_cell(e, it.id, c.id))
                        missing.push_back("(" + e + ", " + it.id + ", " + c.id + ")");
        if (!missing.empty()) {
            std::string msg = source + ": " + std::to_string(missing.size()) +
                              " missing rating cells:";
            std::size_t shown = std::min<std::size_t>(missing.size(), 20);
            for (std::size_t i = 0; i < shown; ++i) msg += " " + missing[i];
            if (missing.size() > shown)
                msg += " ... +" + std::to_string(missing.size() - shown) + " more";
            throw InputError(msg);
        }
    }
    return rs;
}

inline RatingSet parse_ratings(const std::string& path, const Questionnaire& q,
                               bool allow_sparse = false) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open ratings file: " + path);
    return parse_ratings(in, q, path, allow_sparse);
}

// ---------------------------------------------------------------------------
// Alignment between a questionnaire and an embedding matrix.

struct ValidationIssue {
    std::string code;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> errors;
    std::vector<ValidationIssue> warnings;
    bool ok() const { return errors.empty(); }

    std::string summary() const {
        std::ostringstream out;
        for (const auto& e : errors) out << "error[" << e.code << "]: " << e.message << "\n";
        for (const auto& w : warnings) out << "warning[" << w.code << "]: " << w.message << "\n";
        return out.str();
    }
};

// Never throws; all findings land in the report. Dimension 768 is what the
// reference sentence encoders produce, so any other width is only a warning.
inline ValidationReport validate_alignment(const Questionnaire& q, const EmbeddingMatrix& e) {
    ValidationReport rep;
    std::unordered_map<std::string, std::size_t> rows;
    for (std::size_t i = 0; i < e.rows(); ++i) rows.emplace(e.item_ids[i], i);
    for (const auto& it : q.items)
        if (!rows.count(it.id))
            rep.errors.push_back({"missing_embedding", "missing embedding for item '" + it.id + "'"});
    for (const auto& id : e.item_ids)
        if (!q.item_index(id))
            rep.errors.push_back({"unknown_item", "embedding row '" + id + "' has no questionnaire item"});
    if (e.rows() != 0 && e.data.size() != e.rows() * e.dim)
        rep.errors.push_back({"ragged_matrix", "embedding matrix rows have inconsistent dimensions"});
    if (e.dim != 768)
        rep.warnings.push_back({"dimension", "embedding dimension " + std::to_string(e.dim) +
                                                 " != 768"});
    return rep;
}

} // namespace itemval
