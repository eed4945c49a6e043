// Deterministic CSV emission: header row, '.' decimal point, shortest
// round-trip number formatting, no locale dependence.

#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace wkam {

// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

// Row-oriented writer that enforces the declared column count.  The file is
// written incrementally; destruction flushes it.
class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns);

    CsvWriter& field(double v);
    CsvWriter& field(int v);
    // Raw text; must not contain separators or line breaks.
    CsvWriter& field(std::string_view v);
    void end_row();

  private:
    std::ofstream out_;
    std::string path_;
    std::size_t n_columns_ = 0;
    std::size_t row_fields_ = 0;
};

} // namespace wkam
