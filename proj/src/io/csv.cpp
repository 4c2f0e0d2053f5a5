#include "entmux/io/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace entmux::io {

std::string format_double(double value) {
    char buf[40];
    if (value == static_cast<double>(static_cast<int64_t>(value)) &&
        std::abs(value) < 1e15) {
        std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(value));
        return buf;
    }
    // Shortest representation that parses back to the same double.
    for (int precision = 1; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
        if (std::stod(buf) == value) {
            return buf;
        }
    }
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
    for (size_t i = 0; i < header.size(); ++i) {
        if (i) {
            body_ += ',';
        }
        body_ += header[i];
    }
    body_ += '\n';
}

CsvWriter& CsvWriter::begin_row() {
    close_row();
    in_row_ = true;
    fields_in_row_ = 0;
    return *this;
}

CsvWriter& CsvWriter::field(const std::string& value) {
    if (!in_row_) {
        throw std::logic_error("field() outside a row");
    }
    if (fields_in_row_) {
        body_ += ',';
    }
    body_ += value;
    ++fields_in_row_;
    return *this;
}

CsvWriter& CsvWriter::field(double value) { return field(format_double(value)); }

CsvWriter& CsvWriter::field(int64_t value) { return field(std::to_string(value)); }

void CsvWriter::close_row() {
    if (!in_row_) {
        return;
    }
    if (fields_in_row_ != columns_) {
        throw std::logic_error("csv row width does not match header");
    }
    body_ += '\n';
    in_row_ = false;
}

std::string CsvWriter::str() const {
    CsvWriter copy = *this;
    copy.close_row();
    return copy.body_;
}

void CsvWriter::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    out << str();
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

size_t CsvTable::column(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
            return i;
        }
    }
    throw std::runtime_error("csv column not found: " + name);
}

double CsvTable::number(size_t row, size_t col) const {
    return std::stod(rows.at(row).at(col));
}

CsvTable parse_csv(const std::string& text, const std::string& origin) {
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> fields;
        std::string field;
        std::istringstream row(line);
        while (std::getline(row, field, ',')) {
            fields.push_back(field);
        }
        if (line.back() == ',') {
            fields.emplace_back();
        }
        if (first) {
            table.header = std::move(fields);
            first = false;
        } else {
            if (fields.size() != table.header.size()) {
                throw std::runtime_error(origin + ": ragged csv row");
            }
            table.rows.push_back(std::move(fields));
        }
    }
    if (first) {
        throw std::runtime_error(origin + ": empty csv");
    }
    return table;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), path);
}

}  // namespace entmux::io
