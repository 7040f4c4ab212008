#include "mfrbp/nn/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "mfrbp/error.hpp"

namespace mfrbp::nn {
namespace {

constexpr std::array<char, 8> kMagic = {'M', 'F', 'R', 'B', 'P', 'C', 'K', 'P'};
constexpr std::uint64_t kMaxStringBytes = 1ull << 30;
constexpr std::uint64_t kMaxRank = 8;

template <typename T>
void put_le(std::ostream& out, T v) {
  static_assert(std::is_unsigned_v<T>);
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw Error("checkpoint: unexpected end of file");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(bytes[i]) << (8 * i);
  return v;
}

void put_string(std::ostream& out, const std::string& s) {
  put_le<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const auto n = get_le<std::uint64_t>(in);
  if (n > kMaxStringBytes) throw Error("checkpoint: string length out of range");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw Error("checkpoint: unexpected end of file");
  return s;
}

}  // namespace

void write_checkpoint(std::ostream& out, const ParameterStore& store, const std::string& metadata) {
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_string(out, metadata);
  const auto names = store.names();
  put_le<std::uint64_t>(out, names.size());
  for (const auto& name : names) {
    const Tensor& t = store.value(name);
    put_string(out, name);
    put_le<std::uint64_t>(out, t.rank());
    for (auto d : t.shape()) put_le<std::uint64_t>(out, d);
    for (double v : t.values()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  if (!out) throw Error("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw Error("checkpoint: bad magic");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw Error("checkpoint: unsupported format version " + std::to_string(version));
  }
  Checkpoint ck;
  ck.metadata = get_string(in);
  const auto count = get_le<std::uint64_t>(in);
  for (std::uint64_t e = 0; e < count; ++e) {
    std::string name = get_string(in);
    const auto rank = get_le<std::uint64_t>(in);
    if (rank > kMaxRank) throw Error("checkpoint: rank out of range for " + name);
    std::vector<std::size_t> shape(rank);
    std::uint64_t n = 1;
    for (auto& d : shape) {
      d = get_le<std::uint64_t>(in);
      n *= d;
    }
    if (n > kMaxStringBytes) throw Error("checkpoint: tensor too large for " + name);
    std::vector<double> values(n);
    for (auto& v : values) v = std::bit_cast<double>(get_le<std::uint64_t>(in));
    ck.parameters.add(name, Tensor(std::move(shape), std::move(values)));
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& store,
                     const std::string& metadata) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_checkpoint(out, store, metadata);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace mfrbp::nn
