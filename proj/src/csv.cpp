#include "mfmap/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "mfmap/errors.hpp"

namespace mfmap {

std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

std::string format_int(std::int64_t x) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& field, const std::string& context) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = first + field.size();
    auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc() || res.ptr != last) {
        throw DataError("invalid number '" + field + "' in " + context);
    }
    return value;
}

std::int64_t parse_int(const std::string& field, const std::string& context) {
    std::int64_t value = 0;
    const char* first = field.data();
    const char* last = first + field.size();
    auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc() || res.ptr != last) {
        throw DataError("invalid integer '" + field + "' in " + context);
    }
    return value;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(current);
    return fields;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path);
    }
    CsvTable table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
        auto fields = split_line(line);
        if (lineno == 1) {
            table.header = std::move(fields);
        } else {
            if (fields.size() != table.header.size()) {
                throw DataError(path + ":" + std::to_string(lineno) +
                                ": expected " +
                                std::to_string(table.header.size()) +
                                " fields, got " + std::to_string(fields.size()));
            }
            table.rows.push_back(std::move(fields));
        }
    }
    if (table.header.empty()) {
        throw DataError(path + ": missing header row");
    }
    return table;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream out;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j) out << ',';
        out << header[j];
    }
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j) out << ',';
            out << row[j];
        }
        out << '\n';
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) {
        throw DataError("cannot write " + path);
    }
    file << out.str();
    if (!file) {
        throw DataError("write failed for " + path);
    }
}

}  // namespace mfmap
