// Minimal RFC-style CSV reader/writer used by the table parsers and writers.
// Quoted fields may contain commas, doubled quotes, and newlines.
#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace dehydrator::csv {

struct Row {
    std::vector<std::string> fields;
    std::size_t line_no{0};  // 1-based line where the row starts
};

// Reads the next row; returns false on clean EOF. Throws Error(MalformedRow)
// on an unterminated quote.
bool read_row(std::istream& in, Row& row, std::size_t& line_counter);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

std::string escape_field(const std::string& field);

}  // namespace dehydrator::csv
