#include "geoforge/number.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace geoforge {
namespace {

using i128 = __int128;

bool fits(i128 v) {
  return v >= std::numeric_limits<std::int64_t>::min() + 1 && v <= std::numeric_limits<std::int64_t>::max();
}

i128 gcd128(i128 a, i128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    i128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

// Normalized rational from 128-bit parts, or nullopt if it does not fit.
std::optional<Number> make_exact(i128 num, i128 den) {
  if (den < 0) {
    num = -num;
    den = -den;
  }
  i128 g = gcd128(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  if (!fits(num) || !fits(den)) return std::nullopt;
  return Number::ratio(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
}

std::optional<std::int64_t> exact_isqrt(std::int64_t v) {
  if (v < 0) return std::nullopt;
  auto r = static_cast<std::int64_t>(std::llround(std::sqrt(static_cast<double>(v))));
  for (std::int64_t c = std::max<std::int64_t>(0, r - 2); c <= r + 2; ++c) {
    if (static_cast<i128>(c) * c == v) return c;
  }
  return std::nullopt;
}

}  // namespace

Number Number::ratio(std::int64_t num, std::int64_t den) {
  if (den == 0) throw std::invalid_argument("zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  std::int64_t g = std::gcd(num, den);
  Number n;
  n.num_ = g > 1 ? num / g : num;
  n.den_ = g > 1 ? den / g : den;
  return n;
}

Number Number::real(double value) {
  Number n;
  n.exact_ = false;
  n.num_ = 0;
  n.den_ = 1;
  n.real_ = value;
  return n;
}

Number Number::snapped(double value) {
  if (!std::isfinite(value)) return real(value);
  const double tol = 1e-9 * std::max(1.0, std::fabs(value));
  for (std::int64_t den = 1; den <= 12; ++den) {
    double scaled = value * static_cast<double>(den);
    if (std::fabs(scaled) > 9e15) break;
    double n = std::round(scaled);
    if (std::fabs(value - n / static_cast<double>(den)) <= tol) {
      return ratio(static_cast<std::int64_t>(n), den);
    }
  }
  return real(value);
}

std::optional<Number> Number::parse(std::string_view text) {
  if (text.empty()) return std::nullopt;
  auto slash = text.find('/');
  if (slash != std::string_view::npos) {
    auto a = parse(text.substr(0, slash));
    auto b = parse(text.substr(slash + 1));
    if (!a || !b || b->is_zero()) return std::nullopt;
    if (text.substr(slash + 1).find('-') != std::string_view::npos) return std::nullopt;
    return *a / *b;
  }
  bool negative = text.front() == '-';
  std::string_view body = negative ? text.substr(1) : text;
  if (body.empty()) return std::nullopt;
  std::size_t dot = body.find('.');
  std::string digits;
  std::size_t frac_len = 0;
  for (std::size_t i = 0; i < body.size(); ++i) {
    char c = body[i];
    if (i == dot) continue;
    if (c < '0' || c > '9') {
      // Exponent forms fall through to a plain double parse.
      double v = 0;
      auto res = std::from_chars(text.data(), text.data() + text.size(), v);
      if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(v)) return std::nullopt;
      return real(v);
    }
    digits.push_back(c);
    if (dot != std::string_view::npos && i > dot) ++frac_len;
  }
  if (digits.empty()) return std::nullopt;
  if (dot != std::string_view::npos && (dot == 0 || dot + 1 == body.size())) return std::nullopt;
  std::size_t first = digits.find_first_not_of('0');
  std::size_t significant = first == std::string::npos ? 0 : digits.size() - first;
  if (significant <= 15 && frac_len <= 18) {
    std::int64_t n = 0;
    for (char c : digits) n = n * 10 + (c - '0');
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac_len; ++i) den *= 10;
    return ratio(negative ? -n : n, den);
  }
  double v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(v)) return std::nullopt;
  return real(v);
}

double Number::value() const {
  return exact_ ? static_cast<double>(num_) / static_cast<double>(den_) : real_;
}

bool Number::finite() const { return exact_ || std::isfinite(real_); }

int Number::sign() const {
  if (exact_) return num_ > 0 ? 1 : (num_ < 0 ? -1 : 0);
  return real_ > 0 ? 1 : (real_ < 0 ? -1 : 0);
}

Number Number::sqrt() const {
  if (sign() < 0) throw std::domain_error("square root of a negative value");
  if (exact_) {
    auto n = exact_isqrt(num_);
    auto d = exact_isqrt(den_);
    if (n && d) return ratio(*n, *d);
  }
  return snapped(std::sqrt(value()));
}

std::string Number::to_string() const {
  if (exact_) {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
  }
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, real_);
  return std::string(buf, res.ptr);
}

std::string Number::display() const {
  if (is_integer()) return std::to_string(num_);
  const double v = value();
  if (!std::isfinite(v)) return to_string();
  if (v > 0) {
    Number sq = snapped(v * v);
    if (sq.is_integer() && sq.num() > 1 && sq.num() <= 1000000) {
      std::int64_t m = sq.num(), k = 1;
      for (std::int64_t f = 2; f * f <= m; ++f) {
        while (m % (f * f) == 0) {
          m /= f * f;
          k *= f;
        }
      }
      if (m > 1) return (k == 1 ? std::string() : std::to_string(k)) + "\u221a" + std::to_string(m);
    }
  }
  const double mag = std::fabs(v);
  int digits = mag == 0 ? 0 : 4 - (static_cast<int>(std::floor(std::log10(mag))) + 1);
  digits = std::clamp(digits, 0, 12);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  std::string s = buf;
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  if (s == "-0") s = "0";
  return s;
}

Number operator+(const Number& a, const Number& b) {
  if (a.exact_ && b.exact_) {
    if (auto r = make_exact(static_cast<i128>(a.num_) * b.den_ + static_cast<i128>(b.num_) * a.den_,
                            static_cast<i128>(a.den_) * b.den_)) {
      return *r;
    }
  }
  return Number::real(a.value() + b.value());
}

Number operator-(const Number& a, const Number& b) { return a + (-b); }

Number operator*(const Number& a, const Number& b) {
  if (a.exact_ && b.exact_) {
    if (auto r = make_exact(static_cast<i128>(a.num_) * b.num_, static_cast<i128>(a.den_) * b.den_)) return *r;
  }
  return Number::real(a.value() * b.value());
}

Number operator/(const Number& a, const Number& b) {
  if (b.is_zero()) throw std::domain_error("division by zero");
  if (a.exact_ && b.exact_) {
    if (auto r = make_exact(static_cast<i128>(a.num_) * b.den_, static_cast<i128>(a.den_) * b.num_)) return *r;
  }
  return Number::real(a.value() / b.value());
}

Number Number::operator-() const {
  if (exact_) return ratio(-num_, den_);
  return real(-real_);
}

bool operator==(const Number& a, const Number& b) {
  if (a.exact_ && b.exact_) return a.num_ == b.num_ && a.den_ == b.den_;
  return a.value() == b.value();
}

std::partial_ordering operator<=>(const Number& a, const Number& b) {
  if (a.exact_ && b.exact_) {
    i128 l = static_cast<i128>(a.num_) * b.den_;
    i128 r = static_cast<i128>(b.num_) * a.den_;
    if (l < r) return std::partial_ordering::less;
    if (l > r) return std::partial_ordering::greater;
    return std::partial_ordering::equivalent;
  }
  return a.value() <=> b.value();
}

bool approx_equal(double a, double b, double tol) {
  return std::fabs(a - b) <= tol * std::max(1.0, std::fabs(b));
}

bool approx_equal(const Number& a, const Number& b, double tol) {
  if (a.exact() && b.exact()) return a == b || approx_equal(a.value(), b.value(), tol);
  return approx_equal(a.value(), b.value(), tol);
}

}  // namespace geoforge
