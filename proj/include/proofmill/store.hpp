#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "proofmill/core.hpp"

namespace proofmill::core {

inline constexpr int kStoreMajorVersion = 1;
inline constexpr const char* kStoreSchema = "proofmill.trajectory_store";

// Append-only JSONL store, one file per run. The first line is a header
// record carrying the schema version; every other line is one event with
// stable field ordering, so a serial run replays byte-identically.
class TrajectoryStoreWriter : public EventSink {
 public:
  // Creates the file with a header when absent, otherwise appends.
  TrajectoryStoreWriter(const std::filesystem::path& path,
                        const std::string& mode);
  void append(const std::string& problem_id, const TrajectoryEvent& e) override;
  void flush();

 private:
  std::mutex mu_;
  std::ofstream out_;
};

struct TrajectoryStore {
  std::string mode;
  std::vector<Trajectory> trajectories;  // grouped by problem, file order

  // Throws IoError when unreadable, Error on an unknown major version.
  static TrajectoryStore read(const std::filesystem::path& path);

  const Trajectory* find(const std::string& problem_id) const;
  bool has_terminal(const std::string& problem_id) const;
};

}  // namespace proofmill::core
