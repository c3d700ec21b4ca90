#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "proofmill/errors.hpp"

namespace proofmill::prompts {

// Plain-text templates with {{ name }} placeholders, one file per template,
// keyed by file stem. Rendering is strict: every placeholder must be bound,
// so a prompt is always a pure function of its inputs.
class PromptLibrary {
 public:
  static PromptLibrary load_dir(const std::filesystem::path& dir);

  bool has(std::string_view name) const;
  const std::string& raw(std::string_view name) const;
  std::string render(std::string_view name,
                     const std::map<std::string, std::string>& vars) const;

  void set(std::string name, std::string text);  // override a single template

 private:
  std::map<std::string, std::string, std::less<>> templates_;
};

std::string render_template(const std::string& text,
                            const std::map<std::string, std::string>& vars);

}  // namespace proofmill::prompts
