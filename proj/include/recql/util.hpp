#pragma once

#include <string>
#include <string_view>

namespace recql {

// ASCII lower-casing used for all identifier and keyword comparisons.
// Identifiers keep their original spelling everywhere they are displayed.
std::string fold(std::string_view s);

bool iequals(std::string_view a, std::string_view b);

// Shortest decimal text that round-trips to the same double.
std::string fmt_double(double v);

}  // namespace recql
