#pragma once

#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "itemval/errors.hpp"

namespace itemval {

// Minimal RFC 4180 style CSV reader. Fields may be quoted with '"';
// quoted fields may contain commas, doubled quotes and newlines.
class CsvReader {
public:
    explicit CsvReader(std::istream& in, std::string source_name = "<stream>")
        : in_(in), source_(std::move(source_name)) {}

    // Reads the next record. Returns false on clean EOF.
    // line() afterwards reports the line the record started on (1-based).
    bool next(std::vector<std::string>& fields) {
        fields.clear();
        int c = in_.get();
        // skip fully empty lines between records
        while (c == '\n' || c == '\r') {
            if (c == '\n') ++line_no_;
            c = in_.get();
        }
        if (c == EOF) return false;

        record_line_ = line_no_;
        std::string field;
        bool quoted = false;
        while (true) {
            if (quoted) {
                if (c == EOF)
                    throw InputError(source_ + ":" + std::to_string(record_line_) +
                                     ": unterminated quoted field");
                if (c == '"') {
                    int peek = in_.get();
                    if (peek == '"') {
                        field.push_back('"');
                    } else {
                        quoted = false;
                        c = peek;
                        continue;
                    }
                } else {
                    if (c == '\n') ++line_no_;
                    field.push_back(static_cast<char>(c));
                }
            } else {
                if (c == EOF || c == '\n' || c == '\r') {
                    if (c == '\r' && in_.peek() == '\n') in_.get();
                    if (c != EOF) ++line_no_;
                    fields.push_back(std::move(field));
                    return true;
                }
                if (c == ',') {
                    fields.push_back(std::move(field));
                    field.clear();
                } else if (c == '"' && field.empty()) {
                    quoted = true;
                } else {
                    field.push_back(static_cast<char>(c));
                }
            }
            c = in_.get();
        }
    }

    int line() const { return record_line_; }
    const std::string& source() const { return source_; }

private:
    std::istream& in_;
    std::string source_;
    int line_no_ = 1;
    int record_line_ = 1;
};

inline std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out += "\"\"";
        else out.push_back(ch);
    }
    out += '"';
    return out;
}

inline void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) out << ',';
        out << csv_escape(fields[i]);
    }
    out << '\n';
}

inline std::string write_csv_row(const std::vector<std::string>& fields) {
    std::ostringstream out;
    write_csv_row(out, fields);
    return out.str();
}

} // namespace itemval
