#pragma once

// Bit-level views of IEEE-754 binary32/binary64 values.

#include <bit>
#include <charconv>
#include <concepts>
#include <cstdint>
#include <string>
#include <string_view>

#include "sniff/errors.hpp"

namespace sniff {

template <class T>
concept Binary = std::same_as<T, float> || std::same_as<T, double>;

template <Binary T>
struct FloatTraits;

template <>
struct FloatTraits<double> {
  using Bits = std::uint64_t;
  static constexpr int kBits = 64;
  static constexpr int kHexDigits = 16;
  static constexpr const char* kName = "binary64";
};

template <>
struct FloatTraits<float> {
  using Bits = std::uint32_t;
  static constexpr int kBits = 32;
  static constexpr int kHexDigits = 8;
  static constexpr const char* kName = "binary32";
};

/// A floating-point value and its bit pattern, two views of the same storage.
///
/// Bit 0 is the least significant mantissa bit; the top bit is the sign.
template <Binary T>
class FloatBits {
public:
  using Bits = typename FloatTraits<T>::Bits;
  static constexpr int kWidth = FloatTraits<T>::kBits;
  static constexpr int kSignBit = kWidth - 1;

  constexpr FloatBits() = default;
  constexpr explicit FloatBits(T value) : bits_(std::bit_cast<Bits>(value)) {}

  static constexpr FloatBits from_bits(Bits bits) {
    FloatBits w;
    w.bits_ = bits;
    return w;
  }

  constexpr T value() const { return std::bit_cast<T>(bits_); }
  constexpr Bits bits() const { return bits_; }

  friend constexpr bool operator==(FloatBits, FloatBits) = default;

private:
  Bits bits_ = 0;
};

using FloatWord = FloatBits<double>;

template <Binary T>
constexpr FloatBits<T> flip_bit(FloatBits<T> w, int index) {
  if (index < 0 || index >= FloatBits<T>::kWidth)
    throw UsageError("bit index " + std::to_string(index) + " outside 0.." +
                     std::to_string(FloatBits<T>::kWidth - 1));
  using Bits = typename FloatBits<T>::Bits;
  return FloatBits<T>::from_bits(w.bits() ^ (Bits{1} << index));
}

template <Binary T>
constexpr FloatBits<T> sign_flip(FloatBits<T> w) {
  return flip_bit(w, FloatBits<T>::kSignBit);
}

template <Binary T>
constexpr T sign_flip(T value) {
  return sign_flip(FloatBits<T>(value)).value();
}

/// Fixed-width lowercase hex of the bit pattern (16 digits for binary64).
template <Binary T>
std::string to_hex(T value) {
  constexpr int digits = FloatTraits<T>::kHexDigits;
  auto bits = std::bit_cast<typename FloatTraits<T>::Bits>(value);
  std::string out(digits, '0');
  for (int k = digits - 1; k >= 0; --k) {
    out[k] = "0123456789abcdef"[bits & 0xF];
    bits >>= 4;
  }
  return out;
}

/// Inverse of to_hex. Accepts exactly the fixed number of hex digits, either case.
/// Returns false on anything else (decimal literals, prefixes, wrong width).
template <Binary T>
bool parse_hex(std::string_view text, T& out) {
  using Bits = typename FloatTraits<T>::Bits;
  if (text.size() != static_cast<std::size_t>(FloatTraits<T>::kHexDigits)) return false;
  Bits bits = 0;
  for (char c : text) {
    int nibble;
    if (c >= '0' && c <= '9') nibble = c - '0';
    else if (c >= 'a' && c <= 'f') nibble = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') nibble = c - 'A' + 10;
    else return false;
    bits = static_cast<Bits>((bits << 4) | static_cast<Bits>(nibble));
  }
  out = std::bit_cast<T>(bits);
  return true;
}

/// Shortest decimal string that round-trips to the same value.
template <Binary T>
std::string to_decimal(T value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

/// "decimal (hex)" form used for anything printed to a terminal.
template <Binary T>
std::string describe(T value) {
  return to_decimal(value) + " (" + to_hex(value) + ")";
}

}  // namespace sniff
