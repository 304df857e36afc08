#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace nnmf {

// Shortest decimal text that parses back to the same double.
std::string format_real(double value);

// RFC-4180 field quoting: quote when the field has a comma, quote or newline.
std::string csv_field(std::string_view field);
std::string csv_row(const std::vector<std::string>& fields);

}  // namespace nnmf
