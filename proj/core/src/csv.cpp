#include "moodcast/csv.hpp"

#include "moodcast/errors.hpp"

#include <json.hpp>

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace moodcast::csv {

std::vector<std::string> split_fields(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::optional<std::int64_t> parse_i64(const std::string& s) {
    if (s.empty()) return std::nullopt;
    std::int64_t v = 0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) return std::nullopt;
    return v;
}

std::optional<double> parse_f64(const std::string& s) {
    if (s.empty()) return std::nullopt;
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE) return std::nullopt;
    return v;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    // Try increasing precision until the text parses back to the same bits.
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

} // namespace

TableReader::TableReader(const std::filesystem::path& path, const std::vector<std::string>& columns)
    : in_(path), name_(path.string()), columns_(columns) {
    if (!in_.is_open()) {
        throw DataError("cannot open " + name_);
    }
    jsonl_ = path.extension() == ".jsonl";
    if (!jsonl_) {
        std::string header;
        if (!std::getline(in_, header)) {
            throw DataError("empty file (missing header): " + name_);
        }
        ++line_no_;
        const auto fields = split_fields(trim(header));
        bool ok = fields.size() == columns_.size();
        for (std::size_t i = 0; ok && i < fields.size(); ++i) {
            ok = trim(fields[i]) == columns_[i];
        }
        if (!ok) {
            throw DataError("header mismatch in " + name_ + ": got '" + trim(header) + "'");
        }
    }
}

bool TableReader::next(std::vector<std::string>& fields, std::vector<RejectedRow>& rejects) {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_no_;
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (jsonl_) {
            nlohmann::json j = nlohmann::json::parse(t, nullptr, false);
            if (j.is_discarded() || !j.is_object()) {
                rejects.push_back({name_, line_no_, "malformed json", t});
                continue;
            }
            fields.clear();
            bool ok = j.size() == columns_.size();
            for (const auto& col : columns_) {
                if (!j.contains(col)) {
                    ok = false;
                    break;
                }
                const auto& val = j.at(col);
                if (val.is_string()) {
                    fields.push_back(val.get<std::string>());
                } else if (val.is_number_integer()) {
                    fields.push_back(std::to_string(val.get<std::int64_t>()));
                } else if (val.is_number()) {
                    fields.push_back(format_double(val.get<double>()));
                } else {
                    ok = false;
                    break;
                }
            }
            if (!ok) {
                rejects.push_back({name_, line_no_, "fields do not match schema", t});
                continue;
            }
            return true;
        }
        fields = split_fields(t);
        if (fields.size() != columns_.size()) {
            rejects.push_back({name_, line_no_, "wrong field count", t});
            continue;
        }
        for (auto& f : fields) f = trim(f);
        return true;
    }
    return false;
}

TableWriter::TableWriter(const std::filesystem::path& path, const std::vector<std::string>& columns)
    : out_(path), width_(columns.size()) {
    if (!out_.is_open()) {
        throw DataError("cannot open for writing: " + path.string());
    }
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) out_ << ',';
        out_ << columns[i];
    }
    out_ << '\n';
}

void TableWriter::row(const std::vector<std::string>& fields) {
    if (fields.size() != width_) {
        throw DataError("row width mismatch");
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out_ << ',';
        out_ << fields[i];
    }
    out_ << '\n';
}

} // namespace moodcast::csv
