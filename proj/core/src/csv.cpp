#include "synergy/csv.hpp"

#include <fstream>
#include <sstream>

#include "synergy/errors.hpp"

namespace synergy::csv {

namespace {

// Splits one physical line (terminator already stripped) into fields.
// Quoted fields may not contain line breaks; the datasets this library
// defines never need them, and refusing keeps the reader single-pass.
Row split_line(const std::string& line, std::size_t line_no) {
    Row fields;
    std::string field;
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += ch;
            }
        } else if (ch == '"' && field.empty()) {
            in_quotes = true;
        } else if (ch == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field += ch;
        }
    }
    if (in_quotes) {
        throw DataError(line_no, "unterminated quoted field");
    }
    fields.push_back(std::move(field));
    return fields;
}

std::string escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) {
        return field;
    }
    std::string quoted = "\"";
    for (char ch : field) {
        if (ch == '"') {
            quoted += '"';
        }
        quoted += ch;
    }
    quoted += '"';
    return quoted;
}

}  // namespace

std::size_t Table::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
            return i;
        }
    }
    throw DataError("missing required column '" + name + "'");
}

Table read(std::istream& in) {
    Table table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line_no == 1) {
            if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
                line.erase(0, 3);
            }
            table.header = split_line(line, line_no);
            continue;
        }
        if (line.empty()) {
            continue;  // blank separator or trailing newline
        }
        Row row = split_line(line, line_no);
        if (row.size() != table.header.size()) {
            throw DataError(line_no, "expected " + std::to_string(table.header.size()) +
                                         " fields, found " + std::to_string(row.size()));
        }
        table.rows.push_back(std::move(row));
    }
    if (line_no == 0) {
        throw DataError("empty input: no header row");
    }
    return table;
}

Table read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open '" + path + "' for reading");
    }
    return read(in);
}

void write(std::ostream& out, const Table& table) {
    auto write_row = [&out](const Row& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0) {
                out << ',';
            }
            out << escape(row[i]);
        }
        out << '\n';
    };
    write_row(table.header);
    for (const Row& row : table.rows) {
        write_row(row);
    }
}

void write_file(const std::string& path, const Table& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot open '" + path + "' for writing");
    }
    write(out, table);
    if (!out.flush()) {
        throw DataError("failed writing '" + path + "'");
    }
}

}  // namespace synergy::csv
