// Copyright 2026 The moi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MOI_COALITION_HPP_
#define MOI_COALITION_HPP_

#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "moi/error.hpp"
#include "moi/numeric.hpp"

namespace moi {

inline constexpr int kMaxPlayers = 4096;

inline void check_player_count(int n) {
  if (n < 1 || n > kMaxPlayers) {
    fail(ErrorCode::kInvalidArgument,
         "player count " + std::to_string(n) + " outside [1, 4096]");
  }
}

/// A subset of the players {0, ..., n-1}, packed 64 players per word.
/// Bits at or above n are always zero, so equality and hashing only see
/// the members.
class Coalition {
 public:
  using Word = std::uint64_t;
  static constexpr int kWordBits = 64;

  Coalition() = default;

  explicit Coalition(int n) : n_(n), words_(word_count(n), 0) { check_player_count(n); }

  static Coalition full(int n) {
    Coalition c(n);
    for (auto& w : c.words_) w = ~Word{0};
    c.clear_tail();
    return c;
  }

  static Coalition of(int n, std::initializer_list<int> players) {
    Coalition c(n);
    for (int p : players) c.insert(p);
    return c;
  }

  static Coalition of(int n, std::span<const int> players) {
    Coalition c(n);
    for (int p : players) c.insert(p);
    return c;
  }

  /// Low 64 players taken from `bits`; used by the small-n enumerators.
  static Coalition from_word(int n, Word bits) {
    Coalition c(n);
    if (n < kWordBits && (bits >> n) != 0) {
      fail(ErrorCode::kInvalidPlayer, "bit pattern has members >= n");
    }
    c.words_[0] = bits;
    return c;
  }

  int num_players() const { return n_; }

  bool contains(int k) const {
    check(k);
    return (words_[k / kWordBits] >> (k % kWordBits)) & 1U;
  }

  void insert(int k) {
    check(k);
    words_[k / kWordBits] |= Word{1} << (k % kWordBits);
  }

  void erase(int k) {
    check(k);
    words_[k / kWordBits] &= ~(Word{1} << (k % kWordBits));
  }

  Coalition with(int k) const {
    Coalition c = *this;
    c.insert(k);
    return c;
  }

  Coalition with(int a, int b) const {
    Coalition c = *this;
    c.insert(a);
    c.insert(b);
    return c;
  }

  int count() const {
    int total = 0;
    for (Word w : words_) total += std::popcount(w);
    return total;
  }

  bool empty() const {
    for (Word w : words_) {
      if (w != 0) return false;
    }
    return true;
  }

  std::span<const Word> words() const { return words_; }

  template <typename F>
  void for_each(F&& f) const {
    for (std::size_t wi = 0; wi < words_.size(); ++wi) {
      Word w = words_[wi];
      while (w != 0) {
        const int b = std::countr_zero(w);
        f(static_cast<int>(wi) * kWordBits + b);
        w &= w - 1;
      }
    }
  }

  std::vector<int> members() const {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(count()));
    for_each([&](int k) { out.push_back(k); });
    return out;
  }

  std::size_t hash() const {
    std::uint64_t h = static_cast<std::uint64_t>(n_);
    for (Word w : words_) h = hash_combine(h, w);
    return static_cast<std::size_t>(h);
  }

  friend bool operator==(const Coalition& a, const Coalition& b) = default;

  /// Lowercase hex of the coalition read as an n-bit integer with player k
  /// at bit k, most significant digit first, exactly ceil(n/4) digits.
  std::string to_hex() const {
    static constexpr char kDigits[] = "0123456789abcdef";
    const int digits = (n_ + 3) / 4;
    std::string out(static_cast<std::size_t>(digits), '0');
    for (int d = 0; d < digits; ++d) {
      const int bit = d * 4;
      const unsigned nibble =
          static_cast<unsigned>(words_[bit / kWordBits] >> (bit % kWordBits)) & 0xFU;
      out[static_cast<std::size_t>(digits - 1 - d)] = kDigits[nibble];
    }
    return out;
  }

  static Coalition from_hex(int n, std::string_view hex) {
    Coalition c(n);
    const int digits = (n + 3) / 4;
    if (static_cast<int>(hex.size()) != digits) {
      fail(ErrorCode::kFormatError, "hex coalition has " + std::to_string(hex.size()) +
                                        " digits, expected " + std::to_string(digits));
    }
    for (int d = 0; d < digits; ++d) {
      const char ch = hex[static_cast<std::size_t>(digits - 1 - d)];
      unsigned nibble = 0;
      if (ch >= '0' && ch <= '9') {
        nibble = static_cast<unsigned>(ch - '0');
      } else if (ch >= 'a' && ch <= 'f') {
        nibble = static_cast<unsigned>(ch - 'a' + 10);
      } else if (ch >= 'A' && ch <= 'F') {
        nibble = static_cast<unsigned>(ch - 'A' + 10);
      } else {
        fail(ErrorCode::kFormatError, std::string("bad hex digit '") + ch + "'");
      }
      const int bit = d * 4;
      c.words_[bit / kWordBits] |= static_cast<Word>(nibble) << (bit % kWordBits);
    }
    const auto before = c.words_;
    c.clear_tail();
    if (before != c.words_) fail(ErrorCode::kInvalidPlayer, "hex coalition sets bits >= n");
    return c;
  }

 private:
  static std::size_t word_count(int n) {
    return static_cast<std::size_t>((n + kWordBits - 1) / kWordBits);
  }

  void check(int k) const {
    if (k < 0 || k >= n_) {
      fail(ErrorCode::kInvalidPlayer,
           "player " + std::to_string(k) + " out of range for n=" + std::to_string(n_));
    }
  }

  void clear_tail() {
    const int rem = n_ % kWordBits;
    if (rem != 0) words_.back() &= (Word{1} << rem) - 1;
  }

  int n_ = 0;
  std::vector<Word> words_;
};

struct CoalitionHash {
  std::size_t operator()(const Coalition& c) const { return c.hash(); }
};

}  // namespace moi

template <>
struct std::hash<moi::Coalition> {
  std::size_t operator()(const moi::Coalition& c) const { return c.hash(); }
};

#endif  // MOI_COALITION_HPP_
