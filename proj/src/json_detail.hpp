#pragma once

// Internal nlohmann-based parsing helpers shared by the module .cpp files.
// Public headers stay free of the json dependency.

#include <string>

#include "json.hpp"
#include "obwalk/numerics.hpp"

namespace obwalk::detail {

using nlohmann::json;

inline json parse_json(const std::string& text, const std::string& what) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw InputError(what + ": malformed JSON");
    return j;
}

inline double finite_number(const json& j, const std::string& what) {
    if (!j.is_number()) throw InputError(what + ": expected a number");
    double x = j.get<double>();
    if (!std::isfinite(x)) throw InputError(what + ": non-finite number");
    return x;
}

inline Complex complex_from_json(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 2) throw InputError(what + ": expected [re,im]");
    return {finite_number(j[0], what), finite_number(j[1], what)};
}

inline CMatrix matrix_from_json(const json& j, const std::string& what) {
    if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("entries"))
        throw InputError(what + ": expected {rows, cols, entries}");
    if (!j["rows"].is_number_integer() || !j["cols"].is_number_integer())
        throw InputError(what + ": rows/cols must be integers");
    const auto rows = j["rows"].get<Eigen::Index>();
    const auto cols = j["cols"].get<Eigen::Index>();
    if (rows <= 0 || cols <= 0) throw InputError(what + ": rows/cols must be positive");
    const json& e = j["entries"];
    if (!e.is_array() || static_cast<Eigen::Index>(e.size()) != rows * cols)
        throw InputError(what + ": entries must hold rows*cols [re,im] pairs");
    CMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index c = 0; c < cols; ++c)
            m(i, c) = complex_from_json(e[static_cast<std::size_t>(i * cols + c)], what);
    return m;
}

inline CVector vector_from_json(const json& j, const std::string& what) {
    if (!j.is_object() || !j.contains("dim") || !j.contains("entries"))
        throw InputError(what + ": expected {dim, entries}");
    if (!j["dim"].is_number_integer()) throw InputError(what + ": dim must be an integer");
    const auto dim = j["dim"].get<Eigen::Index>();
    if (dim <= 0) throw InputError(what + ": dim must be positive");
    const json& e = j["entries"];
    if (!e.is_array() || static_cast<Eigen::Index>(e.size()) != dim)
        throw InputError(what + ": entries must hold dim [re,im] pairs");
    CVector v(dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        v(i) = complex_from_json(e[static_cast<std::size_t>(i)], what);
    return v;
}

}  // namespace obwalk::detail
