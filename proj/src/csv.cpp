// CSV writer: to_chars-based number formatting keeps the output independent
// of the process locale and byte-identical across runs.

#include "wkam/csv.hpp"

#include <charconv>
#include <stdexcept>
#include <system_error>

namespace wkam {

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    if (res.ec != std::errc())
        throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns)
    : out_(path, std::ios::binary | std::ios::trunc),
      path_(path.string()),
      n_columns_(columns.size()) {
    if (!out_) throw std::runtime_error("csv: cannot open " + path_);
    if (columns.empty()) throw std::logic_error("csv: no columns for " + path_);
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) out_ << ',';
        out_ << columns[i];
    }
    out_ << '\n';
}

CsvWriter& CsvWriter::field(double v) { return field(std::string_view(format_double(v))); }

CsvWriter& CsvWriter::field(int v) { return field(std::string_view(std::to_string(v))); }

CsvWriter& CsvWriter::field(std::string_view v) {
    if (row_fields_ >= n_columns_)
        throw std::logic_error("csv: too many fields in a row of " + path_);
    if (row_fields_) out_ << ',';
    out_ << v;
    ++row_fields_;
    return *this;
}

void CsvWriter::end_row() {
    if (row_fields_ != n_columns_)
        throw std::logic_error("csv: incomplete row in " + path_);
    out_ << '\n';
    row_fields_ = 0;
    if (!out_) throw std::runtime_error("csv: write failed for " + path_);
}

} // namespace wkam
