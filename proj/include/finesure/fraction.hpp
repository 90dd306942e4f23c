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

#pragma once

#include <compare>
#include <cstdint>
#include <numeric>
#include <string>

#include "finesure/error.hpp"

namespace finesure {

// Exact non-negative-denominator rational. Counts are kept as given
// (2/6 stays 2/6) so reports can show the raw numerator and denominator;
// comparison and arithmetic are exact.
class Fraction {
 public:
  constexpr Fraction() = default;
  Fraction(std::int64_t numerator, std::int64_t denominator)
      : num_(numerator), den_(denominator) {
    if (den_ == 0) throw Error(ErrorCode::kPrecondition, "fraction with zero denominator");
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
  }

  static Fraction whole(std::int64_t value) { return Fraction(value, 1); }

  std::int64_t numerator() const noexcept { return num_; }
  std::int64_t denominator() const noexcept { return den_; }
  double value() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }

  Fraction reduced() const {
    const std::int64_t g = std::gcd(num_, den_);
    return g == 0 ? *this : Fraction(num_ / g, den_ / g);
  }

  // "num/den" using the stored (unreduced) counts.
  std::string to_string() const { return std::to_string(num_) + "/" + std::to_string(den_); }

  friend bool operator==(const Fraction& a, const Fraction& b) {
    return static_cast<__int128>(a.num_) * b.den_ == static_cast<__int128>(b.num_) * a.den_;
  }
  friend std::strong_ordering operator<=>(const Fraction& a, const Fraction& b) {
    const __int128 lhs = static_cast<__int128>(a.num_) * b.den_;
    const __int128 rhs = static_cast<__int128>(b.num_) * a.den_;
    if (lhs < rhs) return std::strong_ordering::less;
    if (lhs > rhs) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }

  friend Fraction operator+(const Fraction& a, const Fraction& b) {
    const std::int64_t l = std::lcm(a.den_, b.den_);
    return Fraction(a.num_ * (l / a.den_) + b.num_ * (l / b.den_), l).reduced();
  }
  friend Fraction operator-(const Fraction& a, const Fraction& b) {
    return a + Fraction(-b.num_, b.den_);
  }
  friend Fraction operator*(const Fraction& a, const Fraction& b) {
    const Fraction x = a.reduced();
    const Fraction y = b.reduced();
    return Fraction(x.num_ * y.num_, x.den_ * y.den_).reduced();
  }
  friend Fraction operator/(const Fraction& a, const Fraction& b) {
    return a * Fraction(b.den_, b.num_);
  }

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace finesure
