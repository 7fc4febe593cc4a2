#pragma once

// RFC 4180 CSV: comma separator, double-quote escaping, CRLF or LF line
// ends on input, LF on output. Fields containing a comma, quote, CR or LF are
// quoted on output; nothing else is.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace uuis::csv {

struct Record {
  std::size_t line = 0;  // 1-based physical line where the record starts
  std::vector<std::string> cells;
};

// Throws RowFormatError on an unterminated quote or stray quote.
std::vector<Record> parse(std::string_view text);

std::string escape(std::string_view cell);
std::string format_row(const std::vector<std::string>& cells);
std::string format(const std::vector<std::string>& header,
                   const std::vector<std::vector<std::string>>& rows);

}  // namespace uuis::csv
