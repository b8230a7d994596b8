#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace m2ch {

/// 17 significant digits; "inf", "-inf" and "nan" for non-finite values.
std::string format_double(double v);

/// RFC-4180 style writer: comma separated, LF line endings, header first.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

  CsvWriter& operator<<(double v);
  CsvWriter& operator<<(const std::string& field);
  CsvWriter& empty();  // empty field
  void end_row();

  const std::filesystem::path& path() const { return path_; }

 private:
  void separator();

  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t columns_;
  std::size_t field_ = 0;
};

}  // namespace m2ch
