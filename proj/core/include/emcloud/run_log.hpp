#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "emcloud/event.hpp"
#include "emcloud/history.hpp"

namespace emcloud {

/// Writes one canonical line per event, LF-terminated.
void write_run_log(std::ostream& out, const std::vector<Event>& events);
void write_run_log(const std::filesystem::path& path, const std::vector<Event>& events);

/// Reads canonical lines back. DecodeError offsets are absolute byte
/// offsets into the stream.
std::vector<Event> read_run_log(std::istream& in);
std::vector<Event> read_run_log(const std::filesystem::path& path);

/// Loads a saved log into a fresh store, preserving seq numbers.
HistoryStore replay_into_store(const std::vector<Event>& events, std::size_t n_shards = 1);

}  // namespace emcloud
