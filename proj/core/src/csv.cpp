#include "csv.hpp"

#include "dehydrator/types.hpp"

namespace dehydrator::csv {

bool read_row(std::istream& in, Row& row, std::size_t& line_counter) {
    row.fields.clear();
    int c = in.get();
    // Skip blank lines between rows.
    while (c == '\n' || c == '\r') {
        if (c == '\n') ++line_counter;
        c = in.get();
    }
    if (c == std::istream::traits_type::eof()) return false;

    row.line_no = line_counter;
    std::string field;
    bool quoted = false;
    bool in_quotes = false;

    while (true) {
        if (c == std::istream::traits_type::eof()) {
            if (in_quotes) {
                raise(ErrorCode::MalformedRow,
                      "unterminated quoted field at line " + std::to_string(row.line_no));
            }
            row.fields.push_back(field);
            return true;
        }
        const char ch = static_cast<char>(c);
        if (in_quotes) {
            if (ch == '"') {
                const int next = in.peek();
                if (next == '"') {
                    in.get();
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                if (ch == '\n') ++line_counter;
                field.push_back(ch);
            }
        } else if (ch == '"' && field.empty() && !quoted) {
            quoted = true;
            in_quotes = true;
        } else if (ch == ',') {
            row.fields.push_back(field);
            field.clear();
            quoted = false;
        } else if (ch == '\r') {
            // swallow; handled with the following '\n'
        } else if (ch == '\n') {
            ++line_counter;
            row.fields.push_back(field);
            return true;
        } else {
            field.push_back(ch);
        }
        c = in.get();
    }
}

std::string escape_field(const std::string& field) {
    bool needs_quote = false;
    for (char ch : field) {
        if (ch == ',' || ch == '"' || ch == '\n' || ch == '\r') {
            needs_quote = true;
            break;
        }
    }
    if (!needs_quote) return field;
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out += "\"\"";
        else out.push_back(ch);
    }
    out += "\"";
    return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.put(',');
        out << escape_field(fields[i]);
    }
    out.put('\n');
}

}  // namespace dehydrator::csv
