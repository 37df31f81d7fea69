#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mfmap {

// Shortest round-trip decimal form of x (std::to_chars). Keeps output files
// byte-identical across runs and platforms with IEEE doubles.
std::string format_double(double x);
std::string format_int(std::int64_t x);

// Strict numeric parsing: decimal point, optional sign/exponent, no thousands
// separators, entire field must be consumed. Throws DataError otherwise.
double parse_double(const std::string& field, const std::string& context);
std::int64_t parse_int(const std::string& field, const std::string& context);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

// Reads a comma-separated file with a mandatory header row. Fields are not
// quoted; trailing CR (Windows line endings) is stripped. Every row must have
// the same number of fields as the header.
CsvTable read_csv(const std::string& path);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace mfmap
