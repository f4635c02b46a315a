#pragma once

#include <charconv>
#include <cstdlib>
#include <string>
#include <system_error>

#include "itemval/errors.hpp"

namespace itemval {

// Shortest round-trip decimal representation. Used everywhere numbers are
// serialized so that repeated runs emit byte-identical files.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string format_float(float v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// Like format_float, but never emits a bare integer token: JSON parsers read
// those as integers, which folds -0 into 0 and loses the sign bit.
inline std::string format_float_json(float v) {
    std::string s = format_float(v);
    if (s.find_first_of(".eE") == std::string::npos) s += ".0";
    return s;
}

inline double parse_double(const std::string& s, const std::string& context) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw InputError(context + ": not a number: '" + s + "'");
    return v;
}

inline long parse_int(const std::string& s, const std::string& context) {
    long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw InputError(context + ": not an integer: '" + s + "'");
    return v;
}

} // namespace itemval
