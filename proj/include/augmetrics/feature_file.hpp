#pragma once

#include <bit>
#include <type_traits>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "augmetrics/error.hpp"
#include "augmetrics/frechet.hpp"

namespace augmetrics {

/**
 * FVEC1 feature interchange file. All integers and floats little-endian:
 *
 *   offset 0   5 bytes  magic "FVEC1"
 *          5   u32      n (rows)
 *          9   u32      d (columns)
 *         13   u16      L, byte length of the layer tag
 *         15   L bytes  layer tag, UTF-8, no terminator
 *     15 + L   n*d f32  row-major feature values
 *
 * The file must end exactly after the last value.
 */
struct FeatureFile {
  std::string layer_tag;
  std::uint32_t n = 0;
  std::uint32_t d = 0;
  std::vector<float> values;

  FeatureSet to_feature_set() const {
    return FeatureSet(n, d, std::vector<double>(values.begin(), values.end()));
  }
};

inline constexpr char kFeatureMagic[5] = {'F', 'V', 'E', 'C', '1'};

namespace detail {

template <typename T>
void put_le(std::string& out, T value) {
  using U = std::make_unsigned_t<std::conditional_t<std::is_floating_point_v<T>, std::uint32_t, T>>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
}

template <typename U>
U get_le(const std::string& in, std::size_t offset) {
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bits |= static_cast<U>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  }
  return bits;
}

}  // namespace detail

inline std::string encode_feature_file(const FeatureFile& file) {
  require(file.values.size() == static_cast<std::size_t>(file.n) * file.d, ErrorCode::InvalidArgument,
          "feature body length does not match n*d");
  require(file.layer_tag.size() <= 0xFFFF, ErrorCode::InvalidArgument, "layer tag too long");
  std::string out(kFeatureMagic, sizeof(kFeatureMagic));
  detail::put_le<std::uint32_t>(out, file.n);
  detail::put_le<std::uint32_t>(out, file.d);
  detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(file.layer_tag.size()));
  out += file.layer_tag;
  out.reserve(out.size() + 4 * file.values.size());
  for (float v : file.values) detail::put_le<float>(out, v);
  return out;
}

inline FeatureFile decode_feature_file(const std::string& bytes) {
  constexpr std::size_t kFixedHeader = 15;
  require(bytes.size() >= kFixedHeader, ErrorCode::DecodeError, "feature file shorter than header");
  require(bytes.compare(0, 5, kFeatureMagic, 5) == 0, ErrorCode::DecodeError, "bad feature file magic");
  FeatureFile file;
  file.n = detail::get_le<std::uint32_t>(bytes, 5);
  file.d = detail::get_le<std::uint32_t>(bytes, 9);
  const std::size_t tag_len = detail::get_le<std::uint16_t>(bytes, 13);
  require(bytes.size() >= kFixedHeader + tag_len, ErrorCode::DecodeError, "feature file truncated in layer tag");
  file.layer_tag = bytes.substr(kFixedHeader, tag_len);
  const std::size_t body_offset = kFixedHeader + tag_len;
  const std::size_t count = static_cast<std::size_t>(file.n) * file.d;
  require(bytes.size() - body_offset == 4 * count, ErrorCode::DecodeError,
          "feature body is " + std::to_string(bytes.size() - body_offset) + " bytes, header declares " +
              std::to_string(4 * count));
  file.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    file.values[i] = std::bit_cast<float>(detail::get_le<std::uint32_t>(bytes, body_offset + 4 * i));
  }
  return file;
}

inline std::string read_binary_file(const std::filesystem::path& path) {
  std::error_code ec;
  require(std::filesystem::is_regular_file(path, ec), ErrorCode::FileNotFound, "'" + path.string() + "' not found");
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::IoError, "cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline FeatureFile read_feature_file(const std::filesystem::path& path) {
  return decode_feature_file(read_binary_file(path));
}

inline void write_feature_file(const FeatureFile& file, const std::filesystem::path& path) {
  const std::string bytes = encode_feature_file(file);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(out.good(), ErrorCode::IoError, "write to '" + path.string() + "' failed");
}

}  // namespace augmetrics
