#include "fairrec/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <stdexcept>

namespace fairrec {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0";
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc{}) throw std::runtime_error("format_number: conversion failed");
    return std::string(buf.data(), ptr);
}

namespace {
void write_field(std::ostream& out, std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) {
        out << field;
        return;
    }
    out << '"';
    for (char c : field) {
        if (c == '"') out << '"';
        out << c;
    }
    out << '"';
}
}  // namespace

CsvWriter::CsvWriter(std::ostream& out, std::initializer_list<std::string_view> header)
    : out_(out), columns_(header.size()) {
    bool first = true;
    for (std::string_view h : header) {
        if (!first) out_ << ',';
        write_field(out_, h);
        first = false;
    }
    out_ << '\n';
}

CsvWriter::Row::~Row() {
    // Pad short rows so every line has the header's column count.
    for (; fields_ < w_.columns_; ++fields_) {
        if (fields_ > 0) w_.out_ << ',';
    }
    w_.out_ << '\n';
}

CsvWriter::Row& CsvWriter::Row::operator<<(std::string_view field) {
    if (fields_ > 0) w_.out_ << ',';
    write_field(w_.out_, field);
    ++fields_;
    return *this;
}

std::vector<std::vector<std::string>> read_csv(std::istream& in) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool any = false;
    char c;
    while (in.get(c)) {
        any = true;
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field += '"';
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
            any = false;
        } else if (c != '\r') {
            field += c;
        }
    }
    if (any) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace fairrec
