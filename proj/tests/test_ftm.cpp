#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "xview/errors.hpp"
#include "xview/ftm.hpp"
#include "xview/rng.hpp"

namespace xview {
namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("xview_test_ftm_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(Ftm, ByteLayout) {
  std::ostringstream out;
  write_ftm(out, Tensor({2, 1}, {1.0, -0.5}));
  const std::string bytes = out.str();
  ASSERT_EQ(bytes.size(), 4u + 4u + 2 * 4u + 2 * 4u);
  EXPECT_EQ(bytes.substr(0, 4), "FTM1");
  const unsigned char* b = reinterpret_cast<const unsigned char*>(bytes.data());
  EXPECT_EQ(b[4], 2);  // rank, little endian
  EXPECT_EQ(b[5] + b[6] + b[7], 0);
  EXPECT_EQ(b[8], 2);
  EXPECT_EQ(b[12], 1);
  float first = 0.0f;
  std::memcpy(&first, bytes.data() + 16, 4);  // host is little endian in CI
  if constexpr (std::endian::native == std::endian::little) EXPECT_EQ(first, 1.0f);
}

TEST(Ftm, RoundTripIsBitExactAtF32) {
  Rng rng(17);
  std::vector<double> v(3 * 5 * 7);
  for (double& x : v) x = rng.uniform(-1e3, 1e3);
  v[0] = 0.0;
  v[1] = -0.0;
  v[2] = std::numeric_limits<float>::denorm_min();
  v[3] = std::numeric_limits<float>::max();
  const Tensor t({3, 5, 7}, v);

  std::stringstream first;
  write_ftm(first, t);
  const Tensor back = read_ftm(first);
  ASSERT_EQ(back.shape(), t.shape());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const float expected = static_cast<float>(v[i]);
    EXPECT_EQ(std::bit_cast<std::uint32_t>(static_cast<float>(back.at(i))), std::bit_cast<std::uint32_t>(expected));
    EXPECT_EQ(back.at(i), static_cast<double>(expected));
  }
  // A second pass does not drift.
  std::stringstream second;
  write_ftm(second, back);
  std::stringstream again;
  write_ftm(again, t);
  EXPECT_EQ(second.str(), again.str());
}

TEST(Ftm, RoundToF32MatchesCast) {
  const Tensor t({3}, {0.1, 1.0 / 3.0, 12345.678901});
  const Tensor r = round_to_f32(t);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(r.at(i), static_cast<double>(static_cast<float>(t.at(i))));
}

TEST(Ftm, BadMagicIsFormatError) {
  std::stringstream in(std::string("FTM2\x01\0\0\0\x01\0\0\0\0\0\0\0", 16));
  EXPECT_THROW(read_ftm(in), FormatError);
}

TEST(Ftm, TruncatedPayloadIsFormatError) {
  std::ostringstream out;
  write_ftm(out, Tensor::full({4, 4}, 2.0));
  std::stringstream in(out.str().substr(0, out.str().size() - 3));
  EXPECT_THROW(read_ftm(in), FormatError);
}

TEST(Ftm, ZeroDimensionIsFormatError) {
  std::stringstream in(std::string("FTM1\x01\0\0\0\0\0\0\0", 12));
  EXPECT_THROW(read_ftm(in), FormatError);
}

TEST(Ftm, FileRoundTrip) {
  const fs::path dir = temp_dir("file");
  const Tensor t({2, 2}, {1.25, 2.5, -3.75, 4.0});
  save_ftm(dir / "t.ftm", t);
  const Tensor back = load_ftm(dir / "t.ftm");
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(back.at(i), t.at(i));
  EXPECT_THROW(load_ftm(dir / "missing.ftm"), IoError);
}

TEST(Archive, RoundTripKeepsNamesAndValues) {
  const fs::path dir = temp_dir("archive");
  Rng rng(2);
  TensorArchive archive;
  for (const char* name : {"encoder/stem/kernel", "aim/W0", "meta/epoch"}) {
    std::vector<double> v(6);
    for (double& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
    archive.emplace(name, Tensor({2, 3}, v));
  }
  save_archive(dir / "a.ftm", archive);
  const TensorArchive back = load_archive(dir / "a.ftm");
  ASSERT_EQ(back.size(), archive.size());
  for (const auto& [name, t] : archive) {
    ASSERT_TRUE(back.contains(name)) << name;
    const Tensor& u = back.at(name);
    ASSERT_EQ(u.shape(), t.shape());
    for (std::size_t i = 0; i < t.numel(); ++i) EXPECT_EQ(u.at(i), t.at(i));
  }
  // Identical archives serialize to identical bytes.
  save_archive(dir / "b.ftm", back);
  std::ifstream a(dir / "a.ftm", std::ios::binary), b(dir / "b.ftm", std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
  EXPECT_EQ(sa, sb);
}

TEST(Archive, TrailingBytesRejected) {
  const fs::path dir = temp_dir("trailing");
  save_archive(dir / "a.ftm", {{"x", Tensor::full({1}, 1.0)}});
  {
    std::ofstream out(dir / "a.ftm", std::ios::binary | std::ios::app);
    out << "junk";
  }
  EXPECT_THROW(load_archive(dir / "a.ftm"), FormatError);
}

}  // namespace
}  // namespace xview
