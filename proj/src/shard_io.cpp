#include "frdpca/shard_io.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <string>

#include "frdpca/bytes.hpp"
#include "frdpca/errors.hpp"

namespace frdpca::io {

std::vector<std::uint8_t> encode_shard(const models::DatasetShard& shard) {
  std::vector<std::uint8_t> out;
  const auto n = static_cast<std::uint64_t>(shard.n());
  const auto p = static_cast<std::uint64_t>(shard.p());
  out.reserve(kShardHeaderBytes + n * p * 8);
  out.insert(out.end(), {'F', 'P', 'C', 'A'});
  bytes::put_u32(out, kShardVersion);
  bytes::put_u32(out, shard.machine_index);
  bytes::put_u64(out, n);
  bytes::put_u64(out, p);
  for (Index i = 0; i < shard.n(); ++i) {
    for (Index j = 0; j < shard.p(); ++j) bytes::put_f64(out, shard.data(i, j));
  }
  return out;
}

models::DatasetShard decode_shard(const std::vector<std::uint8_t>& in) {
  if (in.size() < kShardHeaderBytes) throw InputError("shard: truncated header");
  if (in[0] != 'F' || in[1] != 'P' || in[2] != 'C' || in[3] != 'A') {
    throw InputError("shard: bad magic");
  }
  const std::uint32_t version = bytes::get_u32(in.data() + 4);
  if (version != kShardVersion) {
    throw InputError("shard: unsupported version " + std::to_string(version));
  }
  models::DatasetShard shard;
  shard.machine_index = bytes::get_u32(in.data() + 8);
  const std::uint64_t n = bytes::get_u64(in.data() + 12);
  const std::uint64_t p = bytes::get_u64(in.data() + 20);
  if (p != 0 && n > (std::numeric_limits<std::uint64_t>::max() / 8) / p) {
    throw InputError("shard: size overflow");
  }
  if (in.size() != kShardHeaderBytes + n * p * 8) {
    throw InputError("shard: payload is " + std::to_string(in.size() - kShardHeaderBytes) +
                     " bytes, header declares " + std::to_string(n * p * 8));
  }
  shard.data.resize(static_cast<Index>(n), static_cast<Index>(p));
  const std::uint8_t* cursor = in.data() + kShardHeaderBytes;
  for (Index i = 0; i < shard.data.rows(); ++i) {
    for (Index j = 0; j < shard.data.cols(); ++j, cursor += 8) {
      shard.data(i, j) = bytes::get_f64(cursor);
    }
  }
  return shard;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw InputError("write failed for " + path.string());
}

void write_shard(const std::filesystem::path& path, const models::DatasetShard& shard) {
  write_file(path, encode_shard(shard));
}

models::DatasetShard read_shard(const std::filesystem::path& path) {
  return decode_shard(read_file(path));
}

void write_shard_csv(const std::filesystem::path& path, const models::DatasetShard& shard) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << std::setprecision(17);
  for (Index i = 0; i < shard.n(); ++i) {
    for (Index j = 0; j < shard.p(); ++j) {
      if (j) out << ',';
      out << shard.data(i, j);
    }
    out << '\n';
  }
}

}  // namespace frdpca::io
