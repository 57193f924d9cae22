#pragma once

#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace fairrec {

/// Shortest round-trip decimal representation (locale independent).
std::string format_number(double v);

/// Comma-delimited writer with a fixed header. Fields containing commas,
/// quotes or newlines are quoted.
class CsvWriter {
public:
    CsvWriter(std::ostream& out, std::initializer_list<std::string_view> header);

    class Row {
    public:
        explicit Row(CsvWriter& w) : w_(w) {}
        Row(const Row&) = delete;
        ~Row();
        Row& operator<<(std::string_view field);
        Row& operator<<(const std::string& field) { return *this << std::string_view(field); }
        Row& operator<<(const char* field) { return *this << std::string_view(field); }
        Row& operator<<(double v) { return *this << format_number(v); }
        Row& operator<<(long long v) { return *this << std::to_string(v); }
        Row& operator<<(unsigned long long v) { return *this << std::to_string(v); }
        Row& operator<<(int v) { return *this << static_cast<long long>(v); }
        Row& operator<<(unsigned v) { return *this << static_cast<unsigned long long>(v); }
        Row& operator<<(unsigned long v) { return *this << static_cast<unsigned long long>(v); }
        Row& operator<<(long v) { return *this << static_cast<long long>(v); }

    private:
        CsvWriter& w_;
        std::size_t fields_ = 0;
    };

    Row row() { return Row(*this); }

private:
    std::ostream& out_;
    std::size_t columns_;
};

/// Minimal reader for files produced by CsvWriter (handles quoted fields).
std::vector<std::vector<std::string>> read_csv(std::istream& in);

}  // namespace fairrec
