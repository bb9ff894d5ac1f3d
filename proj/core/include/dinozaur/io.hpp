#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dinozaur/data.hpp"
#include "dinozaur/field.hpp"

namespace dinozaur::io {

/// DZF1 field encoding: "DZF1", u32 rank, u32 extents[rank], u32 channels,
/// then row-major values with channels fastest. All integers and 64-bit floats
/// are little-endian.
std::string encode_dzf(const Field& field);
Field decode_dzf(const std::string& bytes);
void write_dzf(const std::filesystem::path& path, const Field& field);
Field read_dzf(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames it into place.
void write_file(const std::filesystem::path& path, const std::string& bytes);

// Little-endian primitives shared by the binary formats.
void put_u32(std::string& out, std::uint32_t v);
void put_u64(std::string& out, std::uint64_t v);
void put_f64(std::string& out, double v);

class ByteReader {
 public:
  ByteReader(const std::string& bytes, std::string context) : bytes_(bytes), context_(std::move(context)) {}
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string take(std::size_t n);
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const;
  const std::string& bytes_;
  std::string context_;
  std::size_t pos_ = 0;
};

/// Dataset archive: a directory holding manifest.json and one DZF1 file per
/// sample input and target (train/000000.in.dzf, train/000000.out.dzf, ...).
struct Archive {
  data::Dataset dataset;
  data::StandardScaler input_scaler;   // fitted on the train split
  data::StandardScaler target_scaler;  // fitted on the train split
};

inline constexpr int kArchiveVersion = 1;

/// Fits both scalers on the train split and writes the archive.
Archive make_archive(data::Dataset dataset);
void write_archive(const std::filesystem::path& dir, const Archive& archive);
Archive read_archive(const std::filesystem::path& dir);

}  // namespace dinozaur::io
