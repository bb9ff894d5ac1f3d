#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dinozaur/errors.hpp"
#include "dinozaur/io.hpp"

namespace dinozaur::io {

namespace {
constexpr char kMagic[4] = {'D', 'Z', 'F', '1'};
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

void ByteReader::need(std::size_t n) const {
  if (remaining() < n) throw FormatError(context_ + ": truncated data");
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
  pos_ += 4;
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
  pos_ += 8;
  return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::string ByteReader::take(std::size_t n) {
  need(n);
  std::string out = bytes_.substr(pos_, n);
  pos_ += n;
  return out;
}

std::string encode_dzf(const Field& field) {
  std::string out(kMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(field.dim()));
  for (int e : field.extents()) put_u32(out, static_cast<std::uint32_t>(e));
  put_u32(out, static_cast<std::uint32_t>(field.channels()));
  out.reserve(out.size() + 8 * field.size());
  for (double v : field.values()) put_f64(out, v);
  return out;
}

Field decode_dzf(const std::string& bytes) {
  ByteReader in(bytes, "DZF1");
  if (in.take(4) != std::string(kMagic, 4)) throw FormatError("DZF1: bad magic");
  const std::uint32_t rank = in.u32();
  if (rank > 16) throw FormatError("DZF1: implausible rank");
  std::vector<int> extents(rank);
  std::size_t points = 1;
  for (auto& e : extents) {
    e = static_cast<int>(in.u32());
    if (e < 1) throw FormatError("DZF1: zero extent");
    points *= static_cast<std::size_t>(e);
  }
  const int channels = static_cast<int>(in.u32());
  if (channels < 1) throw FormatError("DZF1: zero channels");
  const std::size_t n = points * static_cast<std::size_t>(channels);
  if (in.remaining() != 8 * n) throw FormatError("DZF1: payload size does not match header");
  std::vector<double> values(n);
  for (double& v : values) v = in.f64();
  return Field(std::move(extents), channels, std::move(values));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open " + path.string());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError("cannot write " + tmp.string());
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw FormatError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_dzf(const std::filesystem::path& path, const Field& field) { write_file(path, encode_dzf(field)); }

Field read_dzf(const std::filesystem::path& path) { return decode_dzf(read_file(path)); }

}  // namespace dinozaur::io
