#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "xview/tensor.hpp"

namespace xview {

// FTM1 tensor container:
//   "FTM1" | u32 rank | rank x u32 dims | prod(dims) x f32, all little-endian.
// Values are rounded to f32 on write; reading and re-writing is bit-exact.
void write_ftm(std::ostream& out, const Tensor& t);
Tensor read_ftm(std::istream& in);
void save_ftm(const std::filesystem::path& path, const Tensor& t);
Tensor load_ftm(const std::filesystem::path& path);

// Named collection of FTM1 records (checkpoints, feature dumps):
//   "FTMC" | u32 count | count x ( u32 name_len | name bytes | FTM1 record ).
// Entries are written in lexicographic name order.
using TensorArchive = std::map<std::string, Tensor>;

void save_archive(const std::filesystem::path& path, const TensorArchive& archive);
TensorArchive load_archive(const std::filesystem::path& path);

// Round every value to the nearest f32 (the precision FTM1 stores).
Tensor round_to_f32(const Tensor& t);
void round_to_f32_inplace(Tensor& t);

}  // namespace xview
