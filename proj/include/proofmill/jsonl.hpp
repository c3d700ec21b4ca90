#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "proofmill/errors.hpp"

namespace proofmill::jsonl {

// One JSON object per line; blank lines are skipped.
inline std::vector<nlohmann::ordered_json> read_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<nlohmann::ordered_json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(nlohmann::ordered_json::parse(line));
  }
  return out;
}

inline void write_file(const std::filesystem::path& path,
                       const std::vector<nlohmann::ordered_json>& rows) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& row : rows) out << row.dump() << "\n";
}

}  // namespace proofmill::jsonl
