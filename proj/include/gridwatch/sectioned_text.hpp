#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace gridwatch {

// One non-blank, non-comment line of a sectioned text file, split on whitespace.
struct TextLine {
  std::size_t number = 0;
  std::string section;
  std::vector<std::string> tokens;
  std::string text;  // trimmed, comment stripped
};

// Reads the `[section]` / `# comment` line format shared by topology and
// experiment files. Lines before the first header, and headers not listed in
// `allowed_sections`, are ParseErrors.
std::vector<TextLine> read_sectioned_text(std::string_view content,
                                          const std::vector<std::string>& allowed_sections);

std::vector<TextLine> read_sectioned_file(const std::filesystem::path& path,
                                          const std::vector<std::string>& allowed_sections);

}  // namespace gridwatch
