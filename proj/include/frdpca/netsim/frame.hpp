#pragma once

// Wire unit exchanged between the coordinator and workers.
//
// Frame layout, little-endian:
//   "FPC1" | msg_type u8 | machine_index u32 | round u32 | rows u64 | cols u64
//   | rows*cols f64 (row-major) | CRC32 of every preceding byte, u32

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace frdpca::netsim {

enum class MsgType : std::uint8_t {
  basis_up = 0,
  basis_down = 1,
  step_up = 2,
  scalar_up = 3,
  control = 4,
};

const char* to_string(MsgType type);

inline constexpr std::size_t kFrameHeaderBytes = 4 + 1 + 4 + 4 + 8 + 8;
inline constexpr std::size_t kFrameTrailerBytes = 4;
inline constexpr std::size_t kFrameOverheadBytes = kFrameHeaderBytes + kFrameTrailerBytes;

struct RoundMessage {
  MsgType type = MsgType::control;
  std::uint32_t machine_index = 0;
  std::uint32_t round = 1;
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  std::vector<double> payload;  // row-major, rows * cols values

  static RoundMessage from_matrix(MsgType type, std::uint32_t machine, std::uint32_t round,
                                  const Eigen::MatrixXd& m);
  static RoundMessage scalar(MsgType type, std::uint32_t machine, std::uint32_t round,
                             double value);
  Eigen::MatrixXd to_matrix() const;
  std::uint64_t floats() const noexcept { return rows * cols; }

  /// Field-wise equality with payloads compared bit for bit.
  friend bool operator==(const RoundMessage& a, const RoundMessage& b);
};

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_frame(const RoundMessage& msg);

/// Inverse of encode_frame. Throws FramingError (bad magic, unknown type, truncation,
/// trailing bytes, CRC mismatch) carrying the failing byte offset.
RoundMessage decode_frame(std::span<const std::uint8_t> bytes);

/// Total frame length implied by a complete header; validates the magic.
std::size_t frame_length_from_header(std::span<const std::uint8_t> header);

}  // namespace frdpca::netsim
