// Copyright 2026 The clotpath Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "clotpath/csv.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "clotpath/error.h"

namespace clotpath {

int CsvTable::Column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

namespace {

std::vector<std::string> SplitLine(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.emplace_back(line.substr(start));
      break;
    }
    cells.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return cells;
}

}  // namespace

CsvTable ParseCsv(std::string_view text, std::string_view source) {
  CsvTable table;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::vector<std::string> cells = SplitLine(line);
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw Error(Errc::kMalformed,
                  fmt::format("{}:{}: expected {} columns, found {}", source,
                              line_no, table.header.size(), cells.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  if (!have_header) {
    throw Error(Errc::kMalformed, fmt::format("{}: missing CSV header", source));
  }
  return table;
}

std::string ReadFileText(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::kIo, fmt::format("cannot open {}", path.string()));
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CsvTable ReadCsv(const std::filesystem::path& path) {
  return ParseCsv(ReadFileText(path), path.string());
}

int ParseInt(std::string_view cell, std::string_view where) {
  int value = 0;
  const auto [ptr, ec] =
      std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
    throw Error(Errc::kMalformed,
                fmt::format("{}: '{}' is not an integer", where, cell));
  }
  return value;
}

double ParseDouble(std::string_view cell, std::string_view where) {
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty() ||
      !std::isfinite(value)) {
    throw Error(Errc::kMalformed,
                fmt::format("{}: '{}' is not a finite number", where, cell));
  }
  return value;
}

}  // namespace clotpath
