#pragma once

// Shard persistence.
//
// Binary layout (all integers little-endian):
//   magic "FPCA" | version u32 | machine index u32 | n u64 | p u64 | n*p f64, row-major

#include <cstdint>
#include <filesystem>
#include <vector>

#include "frdpca/models.hpp"

namespace frdpca::io {

inline constexpr std::uint32_t kShardVersion = 1;
inline constexpr std::size_t kShardHeaderBytes = 4 + 4 + 4 + 8 + 8;

std::vector<std::uint8_t> encode_shard(const models::DatasetShard& shard);
models::DatasetShard decode_shard(const std::vector<std::uint8_t>& bytes);

void write_shard(const std::filesystem::path& path, const models::DatasetShard& shard);
models::DatasetShard read_shard(const std::filesystem::path& path);

/// Headerless CSV, one observation per line, 17 significant digits.
void write_shard_csv(const std::filesystem::path& path, const models::DatasetShard& shard);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace frdpca::io
