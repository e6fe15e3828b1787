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

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace clotpath {

/// Header plus rows; every row has the header's column count.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column, or -1.
  int Column(std::string_view name) const;
};

/// Comma-separated, no quoting. Blank lines and a trailing CR are ignored.
/// Throws kMalformed on ragged rows, kIo when the file cannot be read.
CsvTable ParseCsv(std::string_view text, std::string_view source);
CsvTable ReadCsv(const std::filesystem::path& path);

/// Whole-cell numeric parsing; `where` prefixes the error message.
int ParseInt(std::string_view cell, std::string_view where);
double ParseDouble(std::string_view cell, std::string_view where);

std::string ReadFileText(const std::filesystem::path& path);

}  // namespace clotpath
