// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace bte {

// Split one CSV line on commas and trim surrounding whitespace from each
// field. The AVL logs and our interchange files never contain quoted commas.
std::vector<std::string> split_csv_line(std::string_view line);

std::string_view trim(std::string_view s);

// Shortest round-trip decimal form of a double (std::to_chars); deterministic
// across runs and platforms, which the byte-identical report contract needs.
std::string format_double(double v);

double parse_double(std::string_view s);  // throws std::invalid_argument
long parse_long(std::string_view s);

}  // namespace bte
