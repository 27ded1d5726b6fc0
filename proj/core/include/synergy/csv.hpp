#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace synergy::csv {

// One parsed line; field values have quoting already resolved.
using Row = std::vector<std::string>;

struct Table {
    Row header;
    std::vector<Row> rows;  // data rows, in file order

    // Index of a header column, or throws DataError naming the column.
    std::size_t column(const std::string& name) const;
};

// Parses comma-separated text with double-quote quoting ("" escapes a quote
// inside a quoted field). Accepts LF and CRLF line endings; skips a UTF-8
// BOM; ignores a trailing empty line. Every data row must have exactly as
// many fields as the header, else DataError with the 1-based line number.
Table read(std::istream& in);
Table read_file(const std::string& path);  // DataError if unreadable

// Writes rows with minimal quoting (only fields containing comma, quote, or
// newline are quoted), LF line endings.
void write(std::ostream& out, const Table& table);
void write_file(const std::string& path, const Table& table);  // DataError if unwritable

}  // namespace synergy::csv
