#pragma once

// Binary field dump, all numbers little-endian:
//   "MFGF" | u32 version = 1 | u32 n_h | u32 n_t | f64 nu | f64 T
//   | (n_t + 1) n_h^2 f64 values of u (time-major, row-major, j fastest)
//   | same for m.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mfg/grid.hpp"

namespace mfg {

struct FieldDump {
  static constexpr std::uint32_t kVersion = 1;
  static constexpr std::size_t kHeaderBytes = 32;

  double nu = 0;
  double horizon = 0;
  Trajectory u;
  Trajectory m;

  static std::size_t expected_bytes(int n_h, int n_t) {
    return kHeaderBytes + 2 * std::size_t(n_t + 1) * std::size_t(n_h) * std::size_t(n_h) * 8;
  }
};

std::vector<unsigned char> encode_field_dump(const FieldDump& dump);
FieldDump decode_field_dump(const std::vector<unsigned char>& bytes);

void write_field_dump(const std::filesystem::path& path, const FieldDump& dump);
FieldDump read_field_dump(const std::filesystem::path& path);

}  // namespace mfg
