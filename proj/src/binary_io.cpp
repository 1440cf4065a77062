#include "rie/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "rie/error.hpp"

namespace rie {

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& buf, T v) {
  static_assert(std::endian::native == std::endian::little,
                "big-endian hosts are not supported");
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  buf.insert(buf.end(), raw, raw + sizeof(T));
}

}  // namespace

void ByteWriter::bytes(std::span<const std::uint8_t> data) {
  buf_.insert(buf_.end(), data.begin(), data.end());
}

void ByteWriter::magic(std::string_view four_cc) {
  buf_.insert(buf_.end(), four_cc.begin(), four_cc.end());
}

void ByteWriter::u32(std::uint32_t v) { put_le(buf_, v); }
void ByteWriter::u64(std::uint64_t v) { put_le(buf_, v); }
void ByteWriter::f32(float v) { put_le(buf_, v); }
void ByteWriter::f64(double v) { put_le(buf_, v); }

void ByteWriter::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  buf_.insert(buf_.end(), s.begin(), s.end());
}

void ByteWriter::f64s(std::span<const double> v) {
  u64(v.size());
  for (double x : v) f64(x);
}

std::span<const std::uint8_t> ByteReader::take(std::size_t n) {
  if (n > remaining()) {
    throw TruncatedFile("need " + std::to_string(n) + " bytes, " +
                        std::to_string(remaining()) + " left");
  }
  auto out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

bool ByteReader::magic_is(std::string_view four_cc) {
  if (remaining() < four_cc.size()) return false;
  auto raw = take(four_cc.size());
  return std::memcmp(raw.data(), four_cc.data(), four_cc.size()) == 0;
}

#define RIE_READ_LE(T)                    \
  T v;                                    \
  auto raw = take(sizeof(T));             \
  std::memcpy(&v, raw.data(), sizeof(T)); \
  return v

std::uint32_t ByteReader::u32() { RIE_READ_LE(std::uint32_t); }
std::uint64_t ByteReader::u64() { RIE_READ_LE(std::uint64_t); }
float ByteReader::f32() { RIE_READ_LE(float); }
double ByteReader::f64() { RIE_READ_LE(double); }

#undef RIE_READ_LE

std::string ByteReader::str() {
  const auto n = u32();
  auto raw = take(n);
  return std::string(raw.begin(), raw.end());
}

std::vector<double> ByteReader::f64s() {
  const auto n = u64();
  if (n > remaining() / sizeof(double)) {
    throw TruncatedFile("array of " + std::to_string(n) + " doubles exceeds payload");
  }
  std::vector<double> out(n);
  for (auto& x : out) x = f64();
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  return data;
}

void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> data) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename " + tmp.string() + ": " + ec.message());
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                                    text.size()));
}

}  // namespace rie
