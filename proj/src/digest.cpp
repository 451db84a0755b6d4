#include "biasattr/digest.hpp"

#include <bit>
#include <cstring>

#include <openssl/evp.h>
#include <openssl/sha.h>

#include "biasattr/error.hpp"

namespace biasattr::digest {

static_assert(std::endian::native == std::endian::little, "packed float codecs assume little-endian hosts");

std::string sha256_hex(std::string_view data) {
    unsigned char out[SHA256_DIGEST_LENGTH];
    SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), out);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string hex;
    hex.reserve(2 * SHA256_DIGEST_LENGTH);
    for (unsigned char c : out) {
        hex.push_back(kHex[c >> 4]);
        hex.push_back(kHex[c & 0xF]);
    }
    return hex;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    if (bytes.empty()) return {};
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
    if (text.empty()) return {};
    if (text.size() % 4 != 0) {
        throw Error(ErrorKind::InvalidArgument, "base64 length is not a multiple of 4");
    }
    std::vector<std::uint8_t> out(3 * (text.size() / 4));
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                  static_cast<int>(text.size()));
    if (n < 0) throw Error(ErrorKind::InvalidArgument, "malformed base64 payload");
    // EVP_DecodeBlock does not account for '=' padding.
    std::size_t size = static_cast<std::size_t>(n);
    if (text.back() == '=') --size;
    if (text.size() >= 2 && text[text.size() - 2] == '=') --size;
    out.resize(size);
    return out;
}

namespace {

template <typename Float>
std::string encode_packed(std::span<const double> values) {
    std::vector<std::uint8_t> bytes(values.size() * sizeof(Float));
    for (std::size_t i = 0; i < values.size(); ++i) {
        const Float v = static_cast<Float>(values[i]);
        std::memcpy(bytes.data() + i * sizeof(Float), &v, sizeof(Float));
    }
    return base64_encode(bytes);
}

template <typename Float>
std::vector<double> decode_packed(std::string_view base64) {
    const auto bytes = base64_decode(base64);
    if (bytes.size() % sizeof(Float) != 0) {
        throw Error(ErrorKind::InvalidArgument, "packed float payload has a truncated element");
    }
    std::vector<double> values(bytes.size() / sizeof(Float));
    for (std::size_t i = 0; i < values.size(); ++i) {
        Float v;
        std::memcpy(&v, bytes.data() + i * sizeof(Float), sizeof(Float));
        values[i] = static_cast<double>(v);
    }
    return values;
}

}  // namespace

std::string encode_f32le(std::span<const double> values) { return encode_packed<float>(values); }
std::vector<double> decode_f32le(std::string_view base64) { return decode_packed<float>(base64); }
std::string encode_f64le(std::span<const double> values) { return encode_packed<double>(values); }
std::vector<double> decode_f64le(std::string_view base64) { return decode_packed<double>(base64); }

}  // namespace biasattr::digest
