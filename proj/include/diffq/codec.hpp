// Copyright 2026 The diffq Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

// Variable-rate coding of signed integer sequences.
//
// ℤ is partitioned into P_0 = {0}, P_1 = {-1, 1} and, for b >= 2,
// P_b = {-(2^b - 1), ..., -2^(b-1), 2^(b-1), ..., 2^b - 1}. An integer in P_b
// is written with b binary digits (its 0-based rank in ascending order) and
// every codeword is terminated by the parsing symbol p. The alphabet is
// ternary, so each symbol carries log2(3) bits.

#ifndef DIFFQ_CODEC_HPP
#define DIFFQ_CODEC_HPP

#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "diffq/error.hpp"

namespace diffq::codec {

enum class Symbol : std::uint8_t { zero = 0, one = 1, parse = 2 };

inline const double kBitsPerSymbol = std::log2(3.0);

inline std::uint64_t magnitude(std::int64_t n) noexcept {
  return n < 0 ? std::uint64_t{0} - static_cast<std::uint64_t>(n) : static_cast<std::uint64_t>(n);
}

/// b = ⌈log2(|n| + 1)⌉, the index of the partition cell holding n.
inline int partition_index(std::int64_t n) noexcept { return std::bit_width(magnitude(n)); }

/// Codeword of n: b digits, most significant first. Within P_b the rank of a
/// negative n is n + 2^b - 1 and the rank of a positive n is n itself.
inline std::vector<Symbol> encode_integer(std::int64_t n) {
  const int b = partition_index(n);
  std::vector<Symbol> word(static_cast<std::size_t>(b));
  if (b == 0) return word;
  const std::uint64_t span = (b >= 64) ? ~std::uint64_t{0} : (std::uint64_t{1} << b) - 1;
  const std::uint64_t rank = n < 0 ? span - magnitude(n) : static_cast<std::uint64_t>(n);
  for (int i = 0; i < b; ++i)
    word[static_cast<std::size_t>(i)] = ((rank >> (b - 1 - i)) & 1U) ? Symbol::one : Symbol::zero;
  return word;
}

/// Inverse of encode_integer for a codeword of known length.
inline std::int64_t decode_integer(std::span<const Symbol> word) {
  const auto b = static_cast<int>(word.size());
  if (b == 0) return 0;
  if (b > 63) fail(ErrorCode::malformed_stream, "codeword longer than 63 digits");
  std::uint64_t rank = 0;
  for (Symbol s : word) {
    if (s == Symbol::parse) fail(ErrorCode::malformed_stream, "parse symbol inside codeword");
    rank = (rank << 1) | (s == Symbol::one ? 1U : 0U);
  }
  const std::uint64_t half = std::uint64_t{1} << (b - 1);
  if (rank >= half) return static_cast<std::int64_t>(rank);
  const std::uint64_t span = (std::uint64_t{1} << b) - 1;
  return -static_cast<std::int64_t>(span - rank);
}

/// Symbols on the wire plus the number of integers they encode.
struct CodedStream {
  std::vector<Symbol> symbols;
  std::size_t integer_count = 0;

  /// log2(3) per ternary symbol; never rounded.
  double bit_cost() const { return kBitsPerSymbol * static_cast<double>(symbols.size()); }
};

/// Ternary symbol count of a sequence: Σ (1 + ⌈log2(|n|+1)⌉).
inline std::size_t symbol_count(std::span<const std::int64_t> ns) noexcept {
  std::size_t total = 0;
  for (std::int64_t n : ns) total += 1 + static_cast<std::size_t>(partition_index(n));
  return total;
}

/// Bit budget of a sequence without materializing it.
inline double sequence_bit_cost(std::span<const std::int64_t> ns) {
  return kBitsPerSymbol * static_cast<double>(symbol_count(ns));
}

inline CodedStream encode_sequence(std::span<const std::int64_t> ns) {
  CodedStream out;
  out.symbols.reserve(symbol_count(ns));
  for (std::int64_t n : ns) {
    const auto word = encode_integer(n);
    out.symbols.insert(out.symbols.end(), word.begin(), word.end());
    out.symbols.push_back(Symbol::parse);
  }
  out.integer_count = ns.size();
  return out;
}

inline std::vector<std::int64_t> decode_sequence(const CodedStream& stream) {
  std::vector<std::int64_t> out;
  out.reserve(stream.integer_count);
  std::size_t start = 0;
  for (std::size_t i = 0; i < stream.symbols.size(); ++i) {
    if (stream.symbols[i] != Symbol::parse) continue;
    out.push_back(decode_integer(std::span<const Symbol>(stream.symbols).subspan(start, i - start)));
    start = i + 1;
  }
  if (start != stream.symbols.size())
    fail(ErrorCode::malformed_stream, "stream does not end with a parse symbol");
  if (out.size() != stream.integer_count)
    fail(ErrorCode::malformed_stream, "stream holds " + std::to_string(out.size()) +
                                          " integers, header says " +
                                          std::to_string(stream.integer_count));
  return out;
}

/// ASCII form over {0, 1, p}.
inline std::string to_ascii(const CodedStream& stream) {
  std::string s;
  s.reserve(stream.symbols.size());
  for (Symbol sym : stream.symbols) s.push_back(sym == Symbol::zero ? '0' : sym == Symbol::one ? '1' : 'p');
  return s;
}

/// Parses the ASCII form; the integer count is the number of parse symbols.
inline CodedStream from_ascii(std::string_view text) {
  CodedStream stream;
  stream.symbols.reserve(text.size());
  for (char ch : text) {
    switch (ch) {
      case '0': stream.symbols.push_back(Symbol::zero); break;
      case '1': stream.symbols.push_back(Symbol::one); break;
      case 'p': stream.symbols.push_back(Symbol::parse); ++stream.integer_count; break;
      default: fail(ErrorCode::malformed_stream, std::string("invalid symbol '") + ch + "'");
    }
  }
  return stream;
}

}  // namespace diffq::codec

#endif  // DIFFQ_CODEC_HPP
