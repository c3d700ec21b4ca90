#include "proofmill/store.hpp"

#include "proofmill/jsonl.hpp"

namespace proofmill::core {

TrajectoryStoreWriter::TrajectoryStoreWriter(const std::filesystem::path& path,
                                             const std::string& mode) {
  bool fresh = !std::filesystem::exists(path) ||
               std::filesystem::file_size(path) == 0;
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::app);
  if (!out_) throw IoError("cannot open trajectory store " + path.string());
  if (fresh) {
    json header;
    header["schema"] = kStoreSchema;
    header["version"] = kStoreMajorVersion;
    header["mode"] = mode;
    out_ << header.dump() << "\n";
    out_.flush();
  }
}

void TrajectoryStoreWriter::append(const std::string& problem_id,
                                   const TrajectoryEvent& e) {
  std::lock_guard<std::mutex> lock(mu_);
  out_ << event_to_json(problem_id, e).dump() << "\n";
  out_.flush();  // events survive an interrupt; resume picks up from here
}

void TrajectoryStoreWriter::flush() {
  std::lock_guard<std::mutex> lock(mu_);
  out_.flush();
}

TrajectoryStore TrajectoryStore::read(const std::filesystem::path& path) {
  auto rows = jsonl::read_file(path);
  if (rows.empty()) throw Error("empty trajectory store: " + path.string());
  const auto& header = rows.front();
  if (header.value("schema", "") != kStoreSchema)
    throw Error("not a trajectory store: " + path.string());
  int version = header.value("version", -1);
  if (version != kStoreMajorVersion)
    throw Error("unsupported store version " + std::to_string(version) +
                " in " + path.string());

  TrajectoryStore store;
  store.mode = header.value("mode", "agentic");
  std::map<std::string, size_t> index;
  for (size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    std::string pid = row.value("problem_id", "");
    if (pid.empty()) throw Error("store event without problem_id");
    auto it = index.find(pid);
    if (it == index.end()) {
      index[pid] = store.trajectories.size();
      store.trajectories.push_back(Trajectory{pid, {}});
      it = index.find(pid);
    }
    append_event(store.trajectories[it->second], event_from_json(row));
  }
  return store;
}

const Trajectory* TrajectoryStore::find(const std::string& problem_id) const {
  for (const auto& t : trajectories)
    if (t.problem_id == problem_id) return &t;
  return nullptr;
}

bool TrajectoryStore::has_terminal(const std::string& problem_id) const {
  const Trajectory* t = find(problem_id);
  return t != nullptr && t->terminal();
}

}  // namespace proofmill::core
