// Copyright 2026 The colorlex Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Minimal RFC 4180-style CSV reading and writing, plus atomic file output.

#ifndef COLORLEX_CSV_HPP_
#define COLORLEX_CSV_HPP_

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace colorlex {

// Splits one line into fields. Double-quoted fields may contain commas and
// doubled quotes; embedded newlines are not supported.
std::vector<std::string> ParseCsvLine(std::string_view line);

// Quotes a field if it contains a comma, quote, or leading/trailing space.
std::string CsvEscape(std::string_view field);

std::string JoinCsv(const std::vector<std::string>& fields);

class CsvReader {
 public:
  // Reads the header row immediately. Throws std::runtime_error if the file
  // cannot be opened or has no header.
  explicit CsvReader(const std::filesystem::path& path);

  const std::vector<std::string>& header() const { return header_; }
  std::optional<std::size_t> find_column(std::string_view name) const;
  // Throws std::runtime_error naming the missing column.
  std::size_t column(std::string_view name) const;

  // Returns false at end of file. Blank lines are skipped.
  bool next(std::vector<std::string>& fields);
  // 1-based line number of the last row returned by next().
  std::size_t line() const { return line_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::vector<std::string> header_;
  std::size_t line_ = 0;
};

// Writes via a temporary file in the same directory, then renames.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view content);

std::string ReadFile(const std::filesystem::path& path);

}  // namespace colorlex

#endif  // COLORLEX_CSV_HPP_
