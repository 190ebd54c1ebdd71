#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace moodcast::csv {

// One quarantined input row. Rows are never silently dropped; every reject
// carries the file, 1-based line number, reason, and the raw text.
struct RejectedRow {
    std::string file;
    std::size_t line = 0;
    std::string reason;
    std::string raw;
};

std::vector<std::string> split_fields(const std::string& line, char sep = ',');

std::optional<std::int64_t> parse_i64(const std::string& s);
std::optional<double> parse_f64(const std::string& s);

// Shortest decimal form that round-trips the double exactly.
std::string format_double(double v);

// Line-oriented reader over a CSV or JSON-Lines file. Validates the header
// (CSV) against the expected column names; JSONL files have no header and
// are detected by extension ".jsonl".
class TableReader {
public:
    TableReader(const std::filesystem::path& path, const std::vector<std::string>& columns);

    bool is_jsonl() const { return jsonl_; }

    // Next data row as column-ordered fields. For JSONL the object's values
    // are mapped onto the declared column order; missing/extra keys reject.
    // Returns false at end of file. Malformed rows are appended to `rejects`
    // and skipped.
    bool next(std::vector<std::string>& fields, std::vector<RejectedRow>& rejects);

    const std::string& file_name() const { return name_; }
    std::size_t line_number() const { return line_no_; }

private:
    std::ifstream in_;
    std::string name_;
    std::vector<std::string> columns_;
    std::size_t line_no_ = 0;
    bool jsonl_ = false;
};

class TableWriter {
public:
    TableWriter(const std::filesystem::path& path, const std::vector<std::string>& columns);

    void row(const std::vector<std::string>& fields);
    void flush() { out_.flush(); }

private:
    std::ofstream out_;
    std::size_t width_;
};

} // namespace moodcast::csv
