#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sevsim {

// Minimal CSV support for the fixed schemas this project reads and writes:
// plain comma separation, no quoting, first line is the header.

struct CsvError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::vector<std::string> csv_split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

class CsvReader {
public:
    CsvReader(const std::string& path, const std::string& expected_header)
        : path_(path), in_(path) {
        if (!in_) throw CsvError(path + ": cannot open file");
        std::string header;
        if (!std::getline(in_, header)) throw CsvError(path + ": empty file, expected header");
        ++line_no_;
        while (!header.empty() && (header.back() == '\r' || header.back() == '\n')) header.pop_back();
        if (header != expected_header)
            throw CsvError(path + ":1: bad header, expected '" + expected_header + "' got '" + header + "'");
    }

    // next data row split into fields; false at EOF; blank lines are skipped
    bool next(std::vector<std::string>& fields) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (line.empty() || line == "\r") continue;
            fields = csv_split(line);
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw CsvError(path_ + ":" + std::to_string(line_no_) + ": " + what);
    }

    long parse_long(const std::string& s, const char* field) const {
        long v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size())
            fail(std::string("malformed ") + field + " '" + s + "'");
        return v;
    }

    double parse_double(const std::string& s, const char* field) const {
        try {
            std::size_t pos = 0;
            double v = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            fail(std::string("malformed ") + field + " '" + s + "'");
        }
    }

    int line_no() const { return line_no_; }

private:
    std::string path_;
    std::ifstream in_;
    int line_no_ = 0;
};

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::string& header) : out_(path) {
        if (!out_) throw CsvError(path + ": cannot open for writing");
        out_ << header << "\n";
    }

    void row(const std::string& line) { out_ << line << "\n"; }

private:
    std::ofstream out_;
};

// fixed-precision decimal formatting, used everywhere output bytes must be stable
inline std::string fmt_double(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

inline std::string fmt_cents(long long cents) {
    char buf[64];
    long long d = cents / 100;
    long long c = cents % 100;
    if (c < 0) c = -c;
    if (cents < 0 && d == 0)
        std::snprintf(buf, sizeof buf, "-0.%02lld", c);
    else
        std::snprintf(buf, sizeof buf, "%lld.%02lld", d, c);
    return buf;
}

} // namespace sevsim
