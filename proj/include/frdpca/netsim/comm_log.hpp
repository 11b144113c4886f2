#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace frdpca::netsim {

enum class Direction : std::uint8_t { up = 0, down = 1, control = 2 };

const char* to_string(Direction d);

/// Traffic of one (round, direction). Payload bytes are always floats * 8; frame bytes add
/// the per-message header and CRC.
struct CommRecord {
  std::uint32_t round = 0;
  Direction direction = Direction::up;
  std::uint64_t floats = 0;
  std::uint64_t payload_bytes = 0;
  std::uint64_t frame_bytes = 0;
  std::uint64_t messages = 0;

  friend bool operator==(const CommRecord&, const CommRecord&) = default;
};

class CommLog {
 public:
  void record(std::uint32_t round, Direction direction, std::uint64_t floats,
              std::uint64_t frame_bytes);

  /// Records ordered by (round, direction).
  std::vector<CommRecord> records() const;

  std::uint64_t floats(std::uint32_t round, Direction direction) const;
  std::uint64_t floats(Direction direction) const;
  /// Up plus down payload floats; control traffic excluded.
  std::uint64_t data_floats() const;
  std::uint64_t messages(Direction direction) const;
  std::uint64_t frame_bytes() const;

  friend bool operator==(const CommLog&, const CommLog&) = default;

 private:
  std::map<std::pair<std::uint32_t, Direction>, CommRecord> by_round_;
};

}  // namespace frdpca::netsim
