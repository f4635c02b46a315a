#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "itemval/errors.hpp"
#include "itemval/numfmt.hpp"

namespace itemval {

// Row-aligned embedding store: row i is the vector of item_ids[i].
// Components are float32, matching the binary file format, so a
// save/load cycle through the binary format is bit-exact.
class EmbeddingMatrix {
public:
    std::vector<std::string> item_ids;
    std::size_t dim = 0;
    std::vector<float> data; // row-major, item_ids.size() x dim

    std::size_t rows() const { return item_ids.size(); }

    std::span<const float> row(std::size_t i) const {
        return std::span<const float>(data.data() + i * dim, dim);
    }

    void append_row(std::string id, std::vector<float> values) {
        if (dim == 0) dim = values.size();
        if (values.size() != dim)
            throw InputError("embedding for '" + id + "' has dimension " +
                             std::to_string(values.size()) + ", expected " +
                             std::to_string(dim));
        item_ids.push_back(std::move(id));
        data.insert(data.end(), values.begin(), values.end());
    }

    // Enforces: unique ids, consistent dimensions, finite components,
    // no all-zero rows (cosine is undefined on them).
    void validate() const {
        if (data.size() != rows() * dim)
            throw InputError("embedding matrix storage is inconsistent");
        std::unordered_set<std::string> seen;
        for (std::size_t i = 0; i < rows(); ++i) {
            if (!seen.insert(item_ids[i]).second)
                throw InputError("duplicate item_id in embeddings: '" + item_ids[i] + "'");
            bool all_zero = true;
            for (float v : row(i)) {
                if (!std::isfinite(v))
                    throw InputError("non-finite value in embedding of '" + item_ids[i] + "'");
                if (v != 0.0f) all_zero = false;
            }
            if (all_zero)
                throw InputError("zero vector for item '" + item_ids[i] + "'");
        }
    }
};

enum class EmbeddingFormat { Jsonl, Binary };

namespace detail {

constexpr char kEmbMagic[6] = {'V', 'L', 'E', 'M', 'B', '1'};

inline void put_u32le(std::ostream& out, std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

inline bool get_u32le(std::istream& in, std::uint32_t& v) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) return false;
    v = std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
        (std::uint32_t(b[3]) << 24);
    return true;
}

inline void put_f32le(std::ostream& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32le(out, bits);
}

inline bool get_f32le(std::istream& in, float& f) {
    std::uint32_t bits;
    if (!get_u32le(in, bits)) return false;
    std::memcpy(&f, &bits, 4);
    return true;
}

} // namespace detail

inline EmbeddingMatrix load_embeddings_jsonl(std::istream& in, const std::string& source) {
    EmbeddingMatrix m;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = source + ":" + std::to_string(line_no);
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw InputError(where + ": invalid JSON: " + e.what());
        }
        if (!rec.is_object() || !rec.contains("item_id") || !rec.contains("vector"))
            throw InputError(where + ": expected {\"item_id\", \"vector\"}");
        if (!rec["item_id"].is_string() || !rec["vector"].is_array())
            throw InputError(where + ": item_id must be a string, vector an array");
        std::vector<float> v;
        v.reserve(rec["vector"].size());
        for (const auto& x : rec["vector"]) {
            if (!x.is_number())
                throw InputError(where + ": vector contains a non-numeric entry");
            v.push_back(static_cast<float>(x.get<double>()));
        }
        if (m.dim != 0 && v.size() != m.dim)
            throw InputError(where + ": inconsistent dimension " + std::to_string(v.size()) +
                             " (expected " + std::to_string(m.dim) + ")");
        m.append_row(rec["item_id"].get<std::string>(), std::move(v));
    }
    m.validate();
    return m;
}

inline EmbeddingMatrix load_embeddings_binary(std::istream& in, const std::string& source) {
    char magic[6];
    if (!in.read(magic, 6) || std::memcmp(magic, detail::kEmbMagic, 6) != 0)
        throw InputError(source + ": missing VLEMB1 magic");
    std::uint32_t dim;
    if (!detail::get_u32le(in, dim) || dim == 0)
        throw InputError(source + ": bad dimension header");
    EmbeddingMatrix m;
    m.dim = dim;
    while (true) {
        std::uint32_t id_len;
        if (!detail::get_u32le(in, id_len)) break; // clean EOF
        std::string id(id_len, '\0');
        if (!in.read(id.data(), id_len))
            throw InputError(source + ": truncated record id");
        std::vector<float> v(dim);
        for (std::uint32_t k = 0; k < dim; ++k) {
            if (!detail::get_f32le(in, v[k]))
                throw InputError(source + ": truncated vector for '" + id + "'");
        }
        m.item_ids.push_back(std::move(id));
        m.data.insert(m.data.end(), v.begin(), v.end());
    }
    m.validate();
    return m;
}

// Sniffs the format from the first bytes (VLEMB1 magic vs JSON text).
inline EmbeddingMatrix load_embeddings(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open embeddings file: " + path);
    char head[6] = {0};
    in.read(head, 6);
    in.clear();
    in.seekg(0);
    if (std::memcmp(head, detail::kEmbMagic, 6) == 0)
        return load_embeddings_binary(in, path);
    return load_embeddings_jsonl(in, path);
}

inline void save_embeddings(const EmbeddingMatrix& m, const std::string& path,
                            EmbeddingFormat format) {
    m.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write embeddings file: " + path);
    if (format == EmbeddingFormat::Binary) {
        out.write(detail::kEmbMagic, 6);
        detail::put_u32le(out, static_cast<std::uint32_t>(m.dim));
        for (std::size_t i = 0; i < m.rows(); ++i) {
            detail::put_u32le(out, static_cast<std::uint32_t>(m.item_ids[i].size()));
            out.write(m.item_ids[i].data(), static_cast<std::streamsize>(m.item_ids[i].size()));
            for (float f : m.row(i)) detail::put_f32le(out, f);
        }
    } else {
        for (std::size_t i = 0; i < m.rows(); ++i) {
            out << "{\"item_id\":" << nlohmann::json(m.item_ids[i]).dump() << ",\"vector\":[";
            auto r = m.row(i);
            for (std::size_t k = 0; k < r.size(); ++k) {
                if (k > 0) out << ',';
                out << format_float_json(r[k]);
            }
            out << "]}\n";
        }
    }
    if (!out.flush())
        throw IoError("write failed: " + path);
}

} // namespace itemval
