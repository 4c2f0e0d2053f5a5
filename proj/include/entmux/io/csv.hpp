#pragma once

#include <string>
#include <vector>

namespace entmux::io {

/// CSV with mandatory header, LF line endings and round-trip-exact float
/// formatting (shortest digits that reparse to the same double).
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);

    CsvWriter& begin_row();
    CsvWriter& field(const std::string& value);
    CsvWriter& field(double value);
    CsvWriter& field(int64_t value);

    /// The assembled document. Throws std::logic_error if a row width ever
    /// disagreed with the header.
    std::string str() const;

    /// Write to a file; throws std::runtime_error on I/O failure.
    void save(const std::string& path) const;

private:
    size_t columns_;
    std::string body_;
    size_t fields_in_row_ = 0;
    bool in_row_ = false;

    void close_row();
};

std::string format_double(double value);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    size_t column(const std::string& name) const;  // throws if absent
    double number(size_t row, size_t col) const;
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text, const std::string& origin);

}  // namespace entmux::io
