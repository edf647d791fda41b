#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lstmctl/linalg.hpp"

namespace lstmctl {

// Numeric table with a header row. Values are written with 17 significant
// digits so a write/read cycle is exact; booleans are stored as 0/1.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<Vector> rows;

    /// Index of a named column; throws IoError if absent.
    [[nodiscard]] std::size_t column(const std::string& name) const;
    [[nodiscard]] Vector col(const std::string& name) const;
    void add_row(Vector row);
};

std::string to_csv(const CsvTable& t);
/// `source` names the origin in error messages.
CsvTable parse_csv(const std::string& text, const std::string& source = "<memory>");

CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const CsvTable& t);

}  // namespace lstmctl
