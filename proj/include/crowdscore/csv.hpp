#pragma once

#include <string>
#include <vector>

namespace crowdscore::csv {

/// Parse one RFC 4180 record. `line_no` is used in error messages and should
/// be the 1-based physical line number of the record's first line.
std::vector<std::string> parse_record(const std::string& line, std::size_t line_no);

/// Quote a field when it contains a comma, quote, or newline.
std::string escape_field(const std::string& field);

std::string join_record(const std::vector<std::string>& fields);

/// Read a whole CSV file into records. Handles quoted fields spanning
/// multiple physical lines. Throws FileNotFoundError / ParseError.
std::vector<std::vector<std::string>> read_file(const std::string& path);

}  // namespace crowdscore::csv
