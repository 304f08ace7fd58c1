#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sequency::csv {

/// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split(std::string_view line);

/// Quotes a field only when it contains a comma, quote or leading '#'.
std::string quote(std::string_view field);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

}  // namespace sequency::csv
