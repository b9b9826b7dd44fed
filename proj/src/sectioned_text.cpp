#include "gridwatch/sectioned_text.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "gridwatch/errors.hpp"

namespace gridwatch {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

std::vector<TextLine> read_sectioned_text(std::string_view content,
                                          const std::vector<std::string>& allowed_sections) {
  std::vector<TextLine> lines;
  std::string section;
  std::size_t number = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    const auto end = std::min(content.find('\n', pos), content.size());
    std::string_view raw = content.substr(pos, end - pos);
    pos = end + 1;
    ++number;

    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    std::string text = trim(raw);
    if (text.empty()) {
      if (end == content.size()) break;
      continue;
    }

    if (text.front() == '[') {
      if (text.back() != ']' || text.size() < 3) throw ParseError(number, "malformed section header '" + text + "'");
      section = trim(std::string_view(text).substr(1, text.size() - 2));
      if (std::find(allowed_sections.begin(), allowed_sections.end(), section) == allowed_sections.end())
        throw ParseError(number, "unknown section [" + section + "]");
      continue;
    }
    if (section.empty()) throw ParseError(number, "content before first section header");

    TextLine line;
    line.number = number;
    line.section = section;
    line.text = text;
    std::istringstream in(text);
    for (std::string tok; in >> tok;) line.tokens.push_back(tok);
    lines.push_back(std::move(line));
    if (end == content.size()) break;
  }
  return lines;
}

std::vector<TextLine> read_sectioned_file(const std::filesystem::path& path,
                                          const std::vector<std::string>& allowed_sections) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return read_sectioned_text(buffer.str(), allowed_sections);
}

}  // namespace gridwatch
