#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace geoforge {

// A metric value: an exact rational when the arithmetic allows it, otherwise
// a finite double. Arithmetic on two exact operands stays exact until the
// 64-bit numerator or denominator would overflow.
class Number {
 public:
  Number() = default;
  Number(std::int64_t value) : num_(value) {}  // NOLINT(google-explicit-constructor)
  Number(int value) : num_(value) {}           // NOLINT(google-explicit-constructor)

  // Throws std::invalid_argument on a zero denominator.
  static Number ratio(std::int64_t num, std::int64_t den);
  static Number real(double value);
  // Like real(), but snaps to a rational with denominator <= 12 when the
  // value lies within 1e-9 (relative) of one.
  static Number snapped(double value);

  // Accepts integers, decimals ("2.5") and simple fractions ("5/2"), with an
  // optional leading '-'. Decimals up to 15 significant digits parse exactly.
  static std::optional<Number> parse(std::string_view text);

  bool exact() const { return exact_; }
  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double value() const;
  bool finite() const;
  bool is_zero() const { return exact_ ? num_ == 0 : real_ == 0.0; }
  int sign() const;
  bool is_integer() const { return exact_ && den_ == 1; }

  // Square root of a non-negative value; exact when both parts of the
  // rational are perfect squares.
  Number sqrt() const;
  Number abs() const { return sign() < 0 ? -*this : *this; }

  // Round-trip representation: "5", "5/2", or the shortest decimal that
  // reads back to the same double.
  std::string to_string() const;

  // Human-facing spelling: integers in full, "k√m" when the square is an
  // integer that is not a perfect square, otherwise at most 4 significant
  // digits with trailing zeros trimmed.
  std::string display() const;

  friend Number operator+(const Number& a, const Number& b);
  friend Number operator-(const Number& a, const Number& b);
  friend Number operator*(const Number& a, const Number& b);
  friend Number operator/(const Number& a, const Number& b);
  Number operator-() const;
  Number& operator+=(const Number& o) { return *this = *this + o; }
  Number& operator-=(const Number& o) { return *this = *this - o; }
  Number& operator*=(const Number& o) { return *this = *this * o; }
  Number& operator/=(const Number& o) { return *this = *this / o; }

  // Numeric equality: two exact values compare as rationals, anything
  // involving a real compares as doubles.
  friend bool operator==(const Number& a, const Number& b);
  friend std::partial_ordering operator<=>(const Number& a, const Number& b);

 private:
  bool exact_ = true;
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
  double real_ = 0.0;
};

// |a - b| <= tol * max(1, |b|)
bool approx_equal(const Number& a, const Number& b, double tol);
bool approx_equal(double a, double b, double tol);

}  // namespace geoforge
