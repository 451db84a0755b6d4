#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace biasattr::digest {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

std::string base64_encode(std::span<const std::uint8_t> bytes);

/// Throws Error{InvalidArgument} on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

// Little-endian packed float arrays, as carried in `f32le` payloads and the
// on-disk cache (f64le keeps cached vectors bit-exact).
std::string encode_f32le(std::span<const double> values);
std::vector<double> decode_f32le(std::string_view base64);
std::string encode_f64le(std::span<const double> values);
std::vector<double> decode_f64le(std::string_view base64);

}  // namespace biasattr::digest
