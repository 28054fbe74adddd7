#include "xview/ftm.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "xview/errors.hpp"

namespace xview {

namespace {

constexpr std::array<char, 4> kTensorMagic{'F', 'T', 'M', '1'};
constexpr std::array<char, 4> kArchiveMagic{'F', 'T', 'M', 'C'};
constexpr std::uint32_t kMaxRank = 16;

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                     static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError("truncated FTM data");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void expect_magic(std::istream& in, const std::array<char, 4>& magic) {
  char m[4];
  if (!in.read(m, 4) || std::memcmp(m, magic.data(), 4) != 0)
    throw FormatError(std::string("bad magic, expected ") + std::string(magic.data(), 4));
}

}  // namespace

void write_ftm(std::ostream& out, const Tensor& t) {
  out.write(kTensorMagic.data(), 4);
  put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
  for (double v : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  if (!out) throw IoError("failed writing FTM1 tensor");
}

Tensor read_ftm(std::istream& in) {
  expect_magic(in, kTensorMagic);
  const std::uint32_t rank = get_u32(in);
  if (rank == 0 || rank > kMaxRank) throw FormatError("FTM1 rank out of range: " + std::to_string(rank));
  Shape shape(rank);
  for (auto& d : shape) {
    d = get_u32(in);
    if (d == 0) throw FormatError("FTM1 dimension of size zero");
  }
  const std::size_t n = shape_numel(shape);
  if (n > (std::size_t{1} << 32)) throw FormatError("FTM1 payload too large");
  std::vector<double> data(n);
  for (auto& v : data) v = static_cast<double>(std::bit_cast<float>(get_u32(in)));
  return Tensor(std::move(shape), std::move(data));
}

void save_ftm(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_ftm(out, t);
}

Tensor load_ftm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return read_ftm(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_archive(const std::filesystem::path& path, const TensorArchive& archive) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kArchiveMagic.data(), 4);
  put_u32(out, static_cast<std::uint32_t>(archive.size()));
  for (const auto& [name, t] : archive) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_ftm(out, t);
  }
  if (!out) throw IoError("failed writing " + path.string());
}

TensorArchive load_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    expect_magic(in, kArchiveMagic);
    const std::uint32_t count = get_u32(in);
    TensorArchive archive;
    for (std::uint32_t i = 0; i < count; ++i) {
      const std::uint32_t len = get_u32(in);
      if (len > 4096) throw FormatError("entry name too long");
      std::string name(len, '\0');
      if (!in.read(name.data(), len)) throw FormatError("truncated entry name");
      archive.emplace(std::move(name), read_ftm(in));
    }
    if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after last entry");
    return archive;
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

Tensor round_to_f32(const Tensor& t) {
  std::vector<double> data(t.data().begin(), t.data().end());
  for (double& v : data) v = static_cast<double>(static_cast<float>(v));
  return Tensor(t.shape(), std::move(data), t.requires_grad());
}

void round_to_f32_inplace(Tensor& t) {
  for (double& v : t.mutable_data()) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace xview
