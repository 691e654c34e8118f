#include "emcloud/run_log.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "emcloud/errors.hpp"

namespace emcloud {

void write_run_log(std::ostream& out, const std::vector<Event>& events) {
  for (const auto& e : events) out << encode_event(e) << '\n';
}

void write_run_log(const std::filesystem::path& path, const std::vector<Event>& events) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("IoError", "cannot open " + path.string() + " for writing");
  write_run_log(out, events);
  if (!out) throw Error("IoError", "failed writing " + path.string());
}

std::vector<Event> read_run_log(std::istream& in) {
  std::vector<Event> events;
  std::string line;
  std::size_t offset = 0;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty()) {
      try {
        events.push_back(decode_event(line));
      } catch (const DecodeError& ex) {
        throw DecodeError(offset + ex.offset(), "line " + std::to_string(line_no) + ": " + ex.what());
      }
    }
    offset += line.size() + 1;
  }
  return events;
}

std::vector<Event> read_run_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("IoError", "cannot open " + path.string());
  return read_run_log(in);
}

HistoryStore replay_into_store(const std::vector<Event>& events, std::size_t n_shards) {
  HistoryStore store(n_shards);
  for (const auto& e : events) store.append(e);
  return store;
}

}  // namespace emcloud
