#include "mfg/field_dump.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace mfg {

namespace {

constexpr unsigned char kMagic[4] = {'M', 'F', 'G', 'F'};

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<unsigned char>(v >> (8 * b)));
}

void put_f64(std::vector<unsigned char>& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>(v >> (8 * b)));
}

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= std::uint32_t(bytes_[pos_++]) << (8 * b);
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= std::uint64_t(bytes_[pos_++]) << (8 * b);
    return std::bit_cast<double>(v);
  }

 private:
  void need(std::size_t k) const {
    if (pos_ + k > bytes_.size()) throw FormatError("field dump truncated");
  }
  const std::vector<unsigned char>& bytes_;
  std::size_t pos_ = 4;
};

void put_trajectory(std::vector<unsigned char>& out, const Trajectory& t) {
  for (const auto& slice : t.slices()) {
    const auto f = slice.flat();
    for (Eigen::Index k = 0; k < f.size(); ++k) put_f64(out, f[k]);
  }
}

Trajectory get_trajectory(Reader& in, int n_h, int n_t, double dt) {
  std::vector<GridFunction> slices;
  slices.reserve(std::size_t(n_t) + 1);
  for (int s = 0; s <= n_t; ++s) {
    GridFunction g(n_h);
    auto f = g.flat();
    for (Eigen::Index k = 0; k < f.size(); ++k) f[k] = in.f64();
    slices.push_back(std::move(g));
  }
  return Trajectory(dt, std::move(slices));
}

}  // namespace

std::vector<unsigned char> encode_field_dump(const FieldDump& dump) {
  if (dump.u.steps() != dump.m.steps() || dump.u.grid_size() != dump.m.grid_size())
    throw InvalidArgument("u and m trajectories differ in shape");
  const int n_h = dump.u.grid_size();
  const int n_t = dump.u.steps();
  std::vector<unsigned char> out(std::begin(kMagic), std::end(kMagic));
  out.reserve(FieldDump::expected_bytes(n_h, n_t));
  put_u32(out, FieldDump::kVersion);
  put_u32(out, static_cast<std::uint32_t>(n_h));
  put_u32(out, static_cast<std::uint32_t>(n_t));
  put_f64(out, dump.nu);
  put_f64(out, dump.horizon);
  put_trajectory(out, dump.u);
  put_trajectory(out, dump.m);
  return out;
}

FieldDump decode_field_dump(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < FieldDump::kHeaderBytes) throw FormatError("field dump truncated: shorter than its header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("not a field dump (bad magic)");
  Reader in(bytes);
  const std::uint32_t version = in.u32();
  if (version != FieldDump::kVersion) throw FormatError("unsupported field dump version " + std::to_string(version));
  const std::uint32_t n_h = in.u32();
  const std::uint32_t n_t = in.u32();
  if (n_h < 4 || n_h > 65536 || n_t < 1 || n_t > (1u << 24)) throw FormatError("field dump header has invalid sizes");
  const std::size_t expected = FieldDump::expected_bytes(int(n_h), int(n_t));
  if (bytes.size() != expected)
    throw FormatError("field dump length " + std::to_string(bytes.size()) + " does not match expected " + std::to_string(expected));
  FieldDump dump;
  dump.nu = in.f64();
  dump.horizon = in.f64();
  if (!(dump.horizon > 0)) throw FormatError("field dump header has non-positive T");
  const double dt = dump.horizon / n_t;
  dump.u = get_trajectory(in, int(n_h), int(n_t), dt);
  dump.m = get_trajectory(in, int(n_h), int(n_t), dt);
  return dump;
}

void write_field_dump(const std::filesystem::path& path, const FieldDump& dump) {
  const auto bytes = encode_field_dump(dump);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing " + path.string());
}

FieldDump read_field_dump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_field_dump(bytes);
}

}  // namespace mfg
