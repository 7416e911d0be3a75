#include <cctype>
#include <cmath>
#include <string>

#include "geoforge/verbalize.hpp"

namespace geoforge::verbalize {
namespace {

constexpr std::string_view kRoot = "√";
constexpr std::string_view kDegree = "°";

bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool word(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '_'; }

class Scanner {
 public:
  explicit Scanner(std::string_view t) : t_(t) {}

  std::vector<double> all() {
    std::vector<double> out;
    while (i_ < t_.size()) {
      if (auto v = token()) {
        out.push_back(*v);
      } else {
        skip_word();
      }
    }
    return out;
  }

 private:
  bool at(std::string_view s) const { return t_.substr(i_, s.size()) == s; }
  void spaces() {
    while (i_ < t_.size() && t_[i_] == ' ') ++i_;
  }

  void skip_word() {
    if (i_ < t_.size() && (word(t_[i_]) || digit(t_[i_]))) {
      while (i_ < t_.size() && (word(t_[i_]) || digit(t_[i_]))) ++i_;
    } else {
      ++i_;
    }
  }

  std::optional<double> decimal() {
    std::size_t s = i_;
    while (i_ < t_.size() && digit(t_[i_])) ++i_;
    if (i_ == s) return std::nullopt;
    if (i_ + 1 < t_.size() && t_[i_] == '.' && digit(t_[i_ + 1])) {
      ++i_;
      while (i_ < t_.size() && digit(t_[i_])) ++i_;
    }
    return std::stod(std::string(t_.substr(s, i_ - s)));
  }

  // Radicand after a root sign, "\sqrt{m}" or "sqrt(m)".
  std::optional<double> root() {
    std::size_t s = i_;
    if (at(kRoot)) {
      i_ += kRoot.size();
      spaces();
      bool paren = i_ < t_.size() && t_[i_] == '(';
      if (paren) ++i_;
      auto m = decimal();
      if (m && paren && i_ < t_.size() && t_[i_] == ')') ++i_;
      if (m) return std::sqrt(*m);
    } else if (at("\\sqrt{") || at("sqrt(")) {
      i_ += at("\\sqrt{") ? 6 : 5;
      auto m = decimal();
      if (m && i_ < t_.size() && (t_[i_] == '}' || t_[i_] == ')')) {
        ++i_;
        return std::sqrt(*m);
      }
    }
    i_ = s;
    return std::nullopt;
  }

  std::optional<double> token() {
    const std::size_t start = i_;
    if (start > 0 && (word(t_[start - 1]) || digit(t_[start - 1]))) return std::nullopt;
    double sign = 1;
    if (at("-") && i_ + 1 < t_.size() && (digit(t_[i_ + 1]) || t_.substr(i_ + 1, kRoot.size()) == kRoot)) {
      sign = -1;
      ++i_;
    }
    std::optional<double> v;
    if (auto r = root()) {
      v = *r;
    } else if (auto d = decimal()) {
      v = *d;
      std::size_t mark = i_;
      spaces();
      if (auto r2 = root()) {
        *v *= *r2;
      } else if (i_ < t_.size() && t_[i_] == '/') {
        ++i_;
        spaces();
        auto den = decimal();
        if (den && *den != 0) {
          *v /= *den;
        } else {
          i_ = mark;
        }
      } else {
        i_ = mark;
      }
    }
    if (!v) {
      i_ = start;
      return std::nullopt;
    }
    if (at(kDegree)) i_ += kDegree.size();
    return sign * *v;
  }

  std::string_view t_;
  std::size_t i_ = 0;
};

}  // namespace

std::vector<double> numeric_tokens(std::string_view text) { return Scanner(text).all(); }

std::optional<double> extract_answer(std::string_view text) {
  auto all = numeric_tokens(text);
  if (all.empty()) return std::nullopt;
  return all.back();
}

bool verify_answer(std::string_view text, double expected) {
  auto v = extract_answer(text);
  if (!v || !std::isfinite(expected)) return false;
  return std::fabs(*v - expected) <= std::max(1e-4, 1e-3 * std::fabs(expected));
}

}  // namespace geoforge::verbalize
