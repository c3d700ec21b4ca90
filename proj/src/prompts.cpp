#include "proofmill/prompts.hpp"

#include <fstream>
#include <sstream>

namespace proofmill::prompts {

PromptLibrary PromptLibrary::load_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw ConfigError("templates directory not found: " + dir.string());
  PromptLibrary lib;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt")
      continue;
    std::ifstream in(entry.path());
    if (!in) throw IoError("cannot read template " + entry.path().string());
    std::ostringstream buf;
    buf << in.rdbuf();
    lib.templates_[entry.path().stem().string()] = buf.str();
  }
  if (lib.templates_.empty())
    throw ConfigError("no .txt templates in " + dir.string());
  return lib;
}

bool PromptLibrary::has(std::string_view name) const {
  return templates_.find(name) != templates_.end();
}

const std::string& PromptLibrary::raw(std::string_view name) const {
  auto it = templates_.find(name);
  if (it == templates_.end())
    throw ConfigError("unknown prompt template: " + std::string(name));
  return it->second;
}

std::string PromptLibrary::render(
    std::string_view name,
    const std::map<std::string, std::string>& vars) const {
  return render_template(raw(name), vars);
}

void PromptLibrary::set(std::string name, std::string text) {
  templates_[std::move(name)] = std::move(text);
}

std::string render_template(const std::string& text,
                            const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(text.size());
  size_t pos = 0;
  while (pos < text.size()) {
    size_t open = text.find("{{", pos);
    if (open == std::string::npos) {
      out.append(text, pos, text.size() - pos);
      break;
    }
    size_t close = text.find("}}", open + 2);
    if (close == std::string::npos)
      throw Error("unterminated {{ placeholder in template");
    out.append(text, pos, open - pos);
    std::string key = text.substr(open + 2, close - open - 2);
    size_t a = key.find_first_not_of(" \t");
    size_t b = key.find_last_not_of(" \t");
    key = a == std::string::npos ? "" : key.substr(a, b - a + 1);
    auto it = vars.find(key);
    if (it == vars.end())
      throw Error("unbound template placeholder: " + key);
    out += it->second;
    pos = close + 2;
  }
  return out;
}

}  // namespace proofmill::prompts
