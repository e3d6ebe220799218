#pragma once

#include <string>

#include "obwalk/numerics.hpp"

namespace obwalk {

// All JSON emitted by the library goes through these formatters: 17 significant
// digits in JSON, 10 in CSV, so numeric output round-trips and stays stable.
std::string fmt17(double x);
std::string fmt10(double x);

// "[re,im]" with 17-digit components.
std::string complex_json(const Complex& z);

// {"rows":R,"cols":C,"entries":[[re,im],...]} row-major.
std::string matrix_json(const CMatrix& m);

// {"dim":N,"entries":[[re,im],...]}.
std::string vector_json(const CVector& v);

// Parsing lives behind file/string entry points; throws InputError with context.
CMatrix matrix_from_json_string(const std::string& text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace obwalk
