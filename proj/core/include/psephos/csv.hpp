#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace psephos::csv {

// Splits one CSV record. Fields may be double-quoted; embedded quotes are
// doubled. Returns false on unbalanced quotes.
bool split_line(std::string_view line, std::vector<std::string>& out);

// Quotes a field if it contains a comma, quote, or newline.
std::string escape(std::string_view field);

std::string join(const std::vector<std::string>& fields);

}  // namespace psephos::csv
