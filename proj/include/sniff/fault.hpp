#pragma once

// Fault specifications: where in a dense-layer neuron computation a value is
// corrupted, and how.
//
//   I_i --(1)--> x w_ij --(3)--> sum --(5)--> softmax --(6)--> z_j
//               (2) w_ij         (4) b_j
//
// Input(1) hits the shared feature before fan-out, Weight(2) the operand,
// Product(3) the multiplication result, Bias(4) the bias operand, Sum(5) the
// logit after bias addition and Activation(6) the softmax output.

#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sniff/errors.hpp"
#include "sniff/float_word.hpp"

namespace sniff {

namespace target {
struct Input {
  std::size_t i;
  friend bool operator==(const Input&, const Input&) = default;
};
struct Weight {
  std::size_t i, j;
  friend bool operator==(const Weight&, const Weight&) = default;
};
struct Product {
  std::size_t i, j;
  friend bool operator==(const Product&, const Product&) = default;
};
struct Bias {
  std::size_t j;
  friend bool operator==(const Bias&, const Bias&) = default;
};
struct Sum {
  std::size_t j;
  friend bool operator==(const Sum&, const Sum&) = default;
};
struct Activation {
  std::size_t j;
  friend bool operator==(const Activation&, const Activation&) = default;
};
}  // namespace target

using FaultTarget = std::variant<target::Input, target::Weight, target::Product, target::Bias,
                                 target::Sum, target::Activation>;

namespace kind {
struct SignFlip {
  friend bool operator==(const SignFlip&, const SignFlip&) = default;
};
struct BitFlip {
  int index;
  friend bool operator==(const BitFlip&, const BitFlip&) = default;
};
struct SetValue {
  double value;
  // Bitwise, so that -0.0 and +0.0 are distinct kinds.
  friend bool operator==(const SetValue& a, const SetValue& b) {
    return FloatWord(a.value) == FloatWord(b.value);
  }
};
struct ByteXor {
  int byte;
  std::uint8_t mask;
  friend bool operator==(const ByteXor&, const ByteXor&) = default;
};
}  // namespace kind

using FaultKind = std::variant<kind::SignFlip, kind::BitFlip, kind::SetValue, kind::ByteXor>;

/// BitFlip index 0..63; ByteXor byte 0..7. Narrower formats are checked again
/// when the fault is applied to a binary32 value.
inline FaultKind make_bit_flip(int index) {
  if (index < 0 || index > 63)
    throw UsageError("bit flip index " + std::to_string(index) + " outside 0..63");
  return kind::BitFlip{index};
}

inline FaultKind make_byte_xor(int byte, unsigned mask) {
  if (byte < 0 || byte > 7)
    throw UsageError("byte index " + std::to_string(byte) + " outside 0..7");
  if (mask > 0xFF) throw UsageError("byte mask " + std::to_string(mask) + " exceeds 8 bits");
  return kind::ByteXor{byte, static_cast<std::uint8_t>(mask)};
}

struct FaultSpec {
  FaultTarget target;
  FaultKind kind;
  friend bool operator==(const FaultSpec&, const FaultSpec&) = default;
};

inline FaultSpec product_sign(std::size_t i, std::size_t j) {
  return {target::Product{i, j}, kind::SignFlip{}};
}
inline FaultSpec bias_sign(std::size_t j) { return {target::Bias{j}, kind::SignFlip{}}; }

/// SignFlip is the same fault as BitFlip on the format's sign bit.
template <Binary T>
FaultKind canonical(const FaultKind& k) {
  if (std::holds_alternative<kind::SignFlip>(k)) return kind::BitFlip{FloatBits<T>::kSignBit};
  return k;
}

template <Binary T>
T apply_fault(T clean, const FaultKind& k) {
  using Word = FloatBits<T>;
  using Bits = typename Word::Bits;
  const Word w(clean);
  return std::visit(
      [&](const auto& f) -> T {
        using K = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<K, kind::SignFlip>) {
          return sign_flip(w).value();
        } else if constexpr (std::is_same_v<K, kind::BitFlip>) {
          return flip_bit(w, f.index).value();
        } else if constexpr (std::is_same_v<K, kind::SetValue>) {
          return static_cast<T>(f.value);
        } else {
          if (f.byte < 0 || f.byte >= Word::kWidth / 8)
            throw UsageError("byte index " + std::to_string(f.byte) + " outside " +
                             FloatTraits<T>::kName + " width");
          const Bits mask = static_cast<Bits>(Bits{f.mask} << (8 * f.byte));
          return Word::from_bits(w.bits() ^ mask).value();
        }
      },
      k);
}

inline FloatWord apply_fault(FloatWord clean, const FaultKind& k) {
  return FloatWord(apply_fault(clean.value(), k));
}

// ---------------------------------------------------------------------------
// Text form: "<target>:<coords>:<kind>[:<arg>]", e.g.
//   product:i=2,j=1:signflip   bias:j=0:bitflip:63
//   sum:j=3:set:0x0000000000000000   weight:i=0,j=1:bytexor:7,0x80

namespace detail {

struct Token {
  std::string_view text;
  std::size_t pos;
};

inline std::vector<Token> split(std::string_view s, char sep, std::size_t base) {
  std::vector<Token> out;
  std::size_t start = 0;
  for (std::size_t k = 0; k <= s.size(); ++k) {
    if (k == s.size() || s[k] == sep) {
      out.push_back({s.substr(start, k - start), base + start});
      start = k + 1;
    }
  }
  return out;
}

inline std::uint64_t parse_uint(const Token& t, const char* what) {
  std::string_view s = t.text;
  int base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    s.remove_prefix(2);
    base = 16;
  }
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ParseError(t.pos, std::string(t.text), std::string("expected ") + what);
  return v;
}

inline std::size_t parse_coord(const Token& t, std::string_view name) {
  auto eq = t.text.find('=');
  if (eq == std::string_view::npos || t.text.substr(0, eq) != name)
    throw ParseError(t.pos, std::string(t.text), "expected " + std::string(name) + "=<index>");
  return parse_uint(Token{t.text.substr(eq + 1), t.pos + eq + 1}, "a non-negative index");
}

}  // namespace detail

inline FaultSpec parse_fault(std::string_view text) {
  using detail::Token;
  auto parts = detail::split(text, ':', 0);
  if (parts.size() < 3)
    throw ParseError(parts.back().pos, std::string(parts.back().text), "expected <target>:<coords>:<kind>");

  const Token& tgt = parts[0];
  auto coords = detail::split(parts[1].text, ',', parts[1].pos);
  auto need = [&](std::size_t count) {
    if (coords.size() != count)
      throw ParseError(parts[1].pos, std::string(parts[1].text),
                       "expected " + std::to_string(count) + " coordinate(s)");
  };

  FaultTarget target;
  if (tgt.text == "input") {
    need(1);
    target = target::Input{detail::parse_coord(coords[0], "i")};
  } else if (tgt.text == "weight" || tgt.text == "product") {
    need(2);
    std::size_t i = detail::parse_coord(coords[0], "i");
    std::size_t j = detail::parse_coord(coords[1], "j");
    if (tgt.text == "weight") target = target::Weight{i, j};
    else target = target::Product{i, j};
  } else if (tgt.text == "bias" || tgt.text == "sum" || tgt.text == "activation") {
    need(1);
    std::size_t j = detail::parse_coord(coords[0], "j");
    if (tgt.text == "bias") target = target::Bias{j};
    else if (tgt.text == "sum") target = target::Sum{j};
    else target = target::Activation{j};
  } else {
    throw ParseError(tgt.pos, std::string(tgt.text),
                     "unknown target (input|weight|product|bias|sum|activation)");
  }

  const Token& kd = parts[2];
  auto need_args = [&](std::size_t count) {
    if (parts.size() != 3 + count) {
      std::size_t at = parts.size() > 3 ? parts[3].pos : kd.pos + kd.text.size();
      throw ParseError(at, std::string(kd.text),
                       "expected " + std::to_string(count) + " argument(s) after kind");
    }
  };

  FaultKind fk;
  if (kd.text == "signflip") {
    need_args(0);
    fk = kind::SignFlip{};
  } else if (kd.text == "bitflip") {
    need_args(1);
    auto idx = detail::parse_uint(parts[3], "a bit index");
    if (idx > 63) throw ParseError(parts[3].pos, std::string(parts[3].text), "bit index outside 0..63");
    fk = kind::BitFlip{static_cast<int>(idx)};
  } else if (kd.text == "set") {
    need_args(1);
    std::string_view hex = parts[3].text;
    if (hex.starts_with("0x") || hex.starts_with("0X")) hex.remove_prefix(2);
    double v;
    if (!parse_hex<double>(hex, v))
      throw ParseError(parts[3].pos, std::string(parts[3].text),
                       "expected a 16-hex-digit binary64 bit pattern");
    fk = kind::SetValue{v};
  } else if (kd.text == "bytexor") {
    need_args(1);
    auto args = detail::split(parts[3].text, ',', parts[3].pos);
    if (args.size() != 2)
      throw ParseError(parts[3].pos, std::string(parts[3].text), "expected <byte>,<mask>");
    auto byte = detail::parse_uint(args[0], "a byte index");
    auto mask = detail::parse_uint(args[1], "an 8-bit mask");
    if (byte > 7) throw ParseError(args[0].pos, std::string(args[0].text), "byte index outside 0..7");
    if (mask > 0xFF) throw ParseError(args[1].pos, std::string(args[1].text), "mask exceeds 8 bits");
    fk = kind::ByteXor{static_cast<int>(byte), static_cast<std::uint8_t>(mask)};
  } else {
    throw ParseError(kd.pos, std::string(kd.text), "unknown kind (signflip|bitflip|set|bytexor)");
  }
  return {target, fk};
}

inline std::string to_string(const FaultSpec& f) {
  std::string out = std::visit(
      [](const auto& t) -> std::string {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, target::Input>) return "input:i=" + std::to_string(t.i);
        else if constexpr (std::is_same_v<T, target::Weight>)
          return "weight:i=" + std::to_string(t.i) + ",j=" + std::to_string(t.j);
        else if constexpr (std::is_same_v<T, target::Product>)
          return "product:i=" + std::to_string(t.i) + ",j=" + std::to_string(t.j);
        else if constexpr (std::is_same_v<T, target::Bias>) return "bias:j=" + std::to_string(t.j);
        else if constexpr (std::is_same_v<T, target::Sum>) return "sum:j=" + std::to_string(t.j);
        else return "activation:j=" + std::to_string(t.j);
      },
      f.target);
  out += std::visit(
      [](const auto& k) -> std::string {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, kind::SignFlip>) return ":signflip";
        else if constexpr (std::is_same_v<K, kind::BitFlip>) return ":bitflip:" + std::to_string(k.index);
        else if constexpr (std::is_same_v<K, kind::SetValue>) return ":set:0x" + to_hex(k.value);
        else {
          char mask[8];
          auto r = std::to_chars(mask, mask + sizeof mask, unsigned{k.mask}, 16);
          return ":bytexor:" + std::to_string(k.byte) + ",0x" + std::string(mask, r.ptr);
        }
      },
      f.kind);
  return out;
}

}  // namespace sniff
