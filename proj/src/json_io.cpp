#include "obwalk/json_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json_detail.hpp"

namespace obwalk {

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string fmt10(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", x);
    return buf;
}

std::string complex_json(const Complex& z) {
    return "[" + fmt17(z.real()) + "," + fmt17(z.imag()) + "]";
}

std::string matrix_json(const CMatrix& m) {
    std::string out = "{\"rows\":" + std::to_string(m.rows()) +
                      ",\"cols\":" + std::to_string(m.cols()) + ",\"entries\":[";
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (i != 0 || j != 0) out += ",";
            out += complex_json(m(i, j));
        }
    return out + "]}";
}

std::string vector_json(const CVector& v) {
    std::string out = "{\"dim\":" + std::to_string(v.size()) + ",\"entries\":[";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i != 0) out += ",";
        out += complex_json(v(i));
    }
    return out + "]}";
}

CMatrix matrix_from_json_string(const std::string& text) {
    return detail::matrix_from_json(detail::parse_json(text, "matrix"), "matrix");
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open file for writing: " + path);
    out << content;
}

}  // namespace obwalk
