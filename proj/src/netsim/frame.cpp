#include "frdpca/netsim/frame.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <limits>

#include "frdpca/bytes.hpp"
#include "frdpca/errors.hpp"

namespace frdpca::netsim {

namespace {

constexpr std::uint8_t kMagic[4] = {'F', 'P', 'C', '1'};
constexpr std::uint64_t kMaxPayloadFloats = std::uint64_t{1} << 40;

void check_magic(std::span<const std::uint8_t> bytes) {
  for (std::size_t i = 0; i < 4; ++i) {
    if (i >= bytes.size()) throw FramingError("frame truncated in magic", bytes.size());
    if (bytes[i] != kMagic[i]) throw FramingError("bad frame magic", i);
  }
}

std::uint64_t payload_floats(std::uint64_t rows, std::uint64_t cols) {
  if (cols != 0 && rows > kMaxPayloadFloats / cols) {
    throw FramingError("frame payload size overflow", 13);
  }
  return rows * cols;
}

}  // namespace

const char* to_string(MsgType type) {
  switch (type) {
    case MsgType::basis_up: return "BASIS_UP";
    case MsgType::basis_down: return "BASIS_DOWN";
    case MsgType::step_up: return "STEP_UP";
    case MsgType::scalar_up: return "SCALAR_UP";
    case MsgType::control: return "CONTROL";
  }
  return "UNKNOWN";
}

RoundMessage RoundMessage::from_matrix(MsgType type, std::uint32_t machine, std::uint32_t round,
                                       const Eigen::MatrixXd& m) {
  RoundMessage msg;
  msg.type = type;
  msg.machine_index = machine;
  msg.round = round;
  msg.rows = static_cast<std::uint64_t>(m.rows());
  msg.cols = static_cast<std::uint64_t>(m.cols());
  msg.payload.resize(static_cast<std::size_t>(msg.rows * msg.cols));
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      msg.payload.data(), m.rows(), m.cols()) = m;
  return msg;
}

RoundMessage RoundMessage::scalar(MsgType type, std::uint32_t machine, std::uint32_t round,
                                  double value) {
  RoundMessage msg;
  msg.type = type;
  msg.machine_index = machine;
  msg.round = round;
  msg.rows = 1;
  msg.cols = 1;
  msg.payload = {value};
  return msg;
}

Eigen::MatrixXd RoundMessage::to_matrix() const {
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      payload.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

bool operator==(const RoundMessage& a, const RoundMessage& b) {
  return a.type == b.type && a.machine_index == b.machine_index && a.round == b.round &&
         a.rows == b.rows && a.cols == b.cols && a.payload.size() == b.payload.size() &&
         (a.payload.empty() ||
          std::memcmp(a.payload.data(), b.payload.data(), a.payload.size() * sizeof(double)) == 0);
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in slices.
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const std::size_t len =
        std::min<std::size_t>(bytes.size() - offset, std::numeric_limits<uInt>::max());
    crc = ::crc32(crc, bytes.data() + offset, static_cast<uInt>(len));
    offset += len;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> encode_frame(const RoundMessage& msg) {
  if (msg.payload.size() != msg.rows * msg.cols) {
    throw InputError("encode_frame: payload holds " + std::to_string(msg.payload.size()) +
                     " values, header declares " + std::to_string(msg.rows * msg.cols));
  }
  std::vector<std::uint8_t> out;
  out.reserve(kFrameOverheadBytes + msg.payload.size() * 8);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  bytes::put_u8(out, static_cast<std::uint8_t>(msg.type));
  bytes::put_u32(out, msg.machine_index);
  bytes::put_u32(out, msg.round);
  bytes::put_u64(out, msg.rows);
  bytes::put_u64(out, msg.cols);
  for (const double v : msg.payload) bytes::put_f64(out, v);
  bytes::put_u32(out, crc32(out));
  return out;
}

std::size_t frame_length_from_header(std::span<const std::uint8_t> header) {
  check_magic(header);
  if (header.size() < kFrameHeaderBytes) {
    throw FramingError("frame truncated in header", header.size());
  }
  const std::uint64_t floats = payload_floats(bytes::get_u64(header.data() + 13),
                                              bytes::get_u64(header.data() + 21));
  return kFrameOverheadBytes + static_cast<std::size_t>(floats) * 8;
}

RoundMessage decode_frame(std::span<const std::uint8_t> in) {
  const std::size_t total = frame_length_from_header(in);
  const std::uint8_t type = in[4];
  if (type > static_cast<std::uint8_t>(MsgType::control)) {
    throw FramingError("unknown message type " + std::to_string(type), 4);
  }
  if (in.size() < total) throw FramingError("frame truncated", in.size());
  if (in.size() > total) throw FramingError("trailing bytes after frame", total);

  const std::size_t crc_at = total - kFrameTrailerBytes;
  const std::uint32_t stored = bytes::get_u32(in.data() + crc_at);
  if (stored != crc32(in.first(crc_at))) throw FramingError("CRC mismatch", crc_at);

  RoundMessage msg;
  msg.type = static_cast<MsgType>(type);
  msg.machine_index = bytes::get_u32(in.data() + 5);
  msg.round = bytes::get_u32(in.data() + 9);
  msg.rows = bytes::get_u64(in.data() + 13);
  msg.cols = bytes::get_u64(in.data() + 21);
  msg.payload.resize(static_cast<std::size_t>(msg.rows * msg.cols));
  const std::uint8_t* cursor = in.data() + kFrameHeaderBytes;
  for (double& v : msg.payload) {
    v = bytes::get_f64(cursor);
    cursor += 8;
  }
  return msg;
}

}  // namespace frdpca::netsim
