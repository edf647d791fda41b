#include "lstmctl/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "lstmctl/errors.hpp"
#include "lstmctl/serialization.hpp"

namespace lstmctl {

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t j = 0; j < header.size(); ++j)
        if (header[j] == name) return j;
    throw IoError("csv: no column named '" + name + "'");
}

Vector CsvTable::col(const std::string& name) const {
    const std::size_t j = column(name);
    Vector out;
    out.reserve(rows.size());
    for (const Vector& r : rows) out.push_back(r[j]);
    return out;
}

void CsvTable::add_row(Vector row) {
    if (row.size() != header.size()) throw DimensionError("csv row", "width differs from the header");
    rows.push_back(std::move(row));
}

std::string to_csv(const CsvTable& t) {
    std::string out;
    for (std::size_t j = 0; j < t.header.size(); ++j) {
        if (j) out += ',';
        out += t.header[j];
    }
    out += '\n';
    char buf[32];
    for (const Vector& r : t.rows) {
        for (std::size_t j = 0; j < r.size(); ++j) {
            if (j) out += ',';
            std::snprintf(buf, sizeof buf, "%.17g", r[j]);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

CsvTable parse_csv(const std::string& text, const std::string& source) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    auto split = [](const std::string& s) {
        std::vector<std::string> f;
        std::string cur;
        for (char c : s) {
            if (c == ',') {
                f.push_back(cur);
                cur.clear();
            } else if (c != '\r') {
                cur += c;
            }
        }
        f.push_back(cur);
        return f;
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        std::vector<std::string> fields = split(line);
        if (t.header.empty()) {
            t.header = std::move(fields);
            continue;
        }
        if (fields.size() != t.header.size())
            throw IoError(source + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                          " fields, got " + std::to_string(fields.size()));
        Vector row(fields.size());
        for (std::size_t j = 0; j < fields.size(); ++j) {
            const char* b = fields[j].c_str();
            char* e = nullptr;
            errno = 0;
            row[j] = std::strtod(b, &e);
            if (e == b || *e != '\0')
                throw IoError(source + ":" + std::to_string(lineno) + ": '" + fields[j] + "' is not a number");
        }
        t.rows.push_back(std::move(row));
    }
    if (t.header.empty()) throw IoError(source + ": empty CSV");
    return t;
}

CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(read_file(path), path.string()); }

void write_csv(const std::filesystem::path& path, const CsvTable& t) { write_file_atomic(path, to_csv(t)); }

}  // namespace lstmctl
