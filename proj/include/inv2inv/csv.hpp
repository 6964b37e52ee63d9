#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace inv2inv {

// RFC-style CSV: fields containing comma, quote, CR or LF are quoted and
// embedded quotes are doubled.
std::string csv_escape(const std::string& field);
void csv_write_row(std::ostream& out, const std::vector<std::string>& fields);
std::vector<std::vector<std::string>> csv_parse(const std::string& text);

std::string format_double(double v);

}  // namespace inv2inv
