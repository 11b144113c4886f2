#include "frdpca/netsim/comm_log.hpp"

namespace frdpca::netsim {

const char* to_string(Direction d) {
  switch (d) {
    case Direction::up: return "up";
    case Direction::down: return "down";
    case Direction::control: return "control";
  }
  return "?";
}

void CommLog::record(std::uint32_t round, Direction direction, std::uint64_t floats,
                     std::uint64_t frame_bytes) {
  auto& rec = by_round_[{round, direction}];
  rec.round = round;
  rec.direction = direction;
  rec.floats += floats;
  rec.payload_bytes += floats * 8;
  rec.frame_bytes += frame_bytes;
  rec.messages += 1;
}

std::vector<CommRecord> CommLog::records() const {
  std::vector<CommRecord> out;
  out.reserve(by_round_.size());
  for (const auto& [key, rec] : by_round_) out.push_back(rec);
  return out;
}

std::uint64_t CommLog::floats(std::uint32_t round, Direction direction) const {
  const auto it = by_round_.find({round, direction});
  return it == by_round_.end() ? 0 : it->second.floats;
}

std::uint64_t CommLog::floats(Direction direction) const {
  std::uint64_t total = 0;
  for (const auto& [key, rec] : by_round_) {
    if (rec.direction == direction) total += rec.floats;
  }
  return total;
}

std::uint64_t CommLog::data_floats() const {
  return floats(Direction::up) + floats(Direction::down);
}

std::uint64_t CommLog::messages(Direction direction) const {
  std::uint64_t total = 0;
  for (const auto& [key, rec] : by_round_) {
    if (rec.direction == direction) total += rec.messages;
  }
  return total;
}

std::uint64_t CommLog::frame_bytes() const {
  std::uint64_t total = 0;
  for (const auto& [key, rec] : by_round_) total += rec.frame_bytes;
  return total;
}

}  // namespace frdpca::netsim
