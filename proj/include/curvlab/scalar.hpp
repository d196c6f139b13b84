#pragma once

#include <gmpxx.h>

#include <cctype>
#include <cstdio>
#include <complex>
#include <string>
#include <string_view>
#include <variant>

#include "curvlab/errors.hpp"

namespace curvlab {

using cplx = std::complex<double>;

/// Exact complex number with rational real and imaginary parts.
class GaussianRational {
 public:
  GaussianRational() = default;
  GaussianRational(long value) : re_(value), im_(0) {}  // NOLINT(google-explicit-constructor)
  GaussianRational(mpq_class re, mpq_class im = 0) : re_(std::move(re)), im_(std::move(im)) {
    re_.canonicalize();
    im_.canonicalize();
  }

  const mpq_class& re() const { return re_; }
  const mpq_class& im() const { return im_; }

  bool is_zero() const { return sgn(re_) == 0 && sgn(im_) == 0; }
  bool is_real() const { return sgn(im_) == 0; }
  GaussianRational conj() const { return {re_, -im_}; }
  mpq_class norm_sq() const { return re_ * re_ + im_ * im_; }
  cplx to_complex() const { return {re_.get_d(), im_.get_d()}; }

  GaussianRational& operator+=(const GaussianRational& o) {
    re_ += o.re_;
    im_ += o.im_;
    return *this;
  }
  GaussianRational& operator-=(const GaussianRational& o) {
    re_ -= o.re_;
    im_ -= o.im_;
    return *this;
  }
  GaussianRational& operator*=(const GaussianRational& o) {
    mpq_class r = re_ * o.re_ - im_ * o.im_;
    mpq_class i = re_ * o.im_ + im_ * o.re_;
    re_ = std::move(r);
    im_ = std::move(i);
    return *this;
  }
  GaussianRational& operator*=(const mpq_class& s) {
    re_ *= s;
    im_ *= s;
    return *this;
  }
  GaussianRational& operator/=(const GaussianRational& o) {
    const mpq_class n = o.norm_sq();
    if (sgn(n) == 0) throw NumericFailure("division by zero Gaussian rational");
    *this *= o.conj();
    re_ /= n;
    im_ /= n;
    return *this;
  }

  friend GaussianRational operator+(GaussianRational a, const GaussianRational& b) { return a += b; }
  friend GaussianRational operator-(GaussianRational a, const GaussianRational& b) { return a -= b; }
  friend GaussianRational operator*(GaussianRational a, const GaussianRational& b) { return a *= b; }
  friend GaussianRational operator*(GaussianRational a, const mpq_class& s) { return a *= s; }
  friend GaussianRational operator/(GaussianRational a, const GaussianRational& b) { return a /= b; }
  friend GaussianRational operator-(const GaussianRational& a) { return {-a.re_, -a.im_}; }
  friend bool operator==(const GaussianRational& a, const GaussianRational& b) {
    return a.re_ == b.re_ && a.im_ == b.im_;
  }

  /// "p/q", "p/q+r/si", "r/si" (integers print without denominator).
  std::string str() const {
    if (sgn(im_) == 0) return re_.get_str();
    std::string imag = im_.get_str() + "i";
    if (sgn(re_) == 0) return imag;
    return re_.get_str() + (sgn(im_) > 0 ? "+" : "") + imag;
  }

 private:
  mpq_class re_{0};
  mpq_class im_{0};
};

/// Arithmetic shared by both scalar domains of the polynomial layer.
template <class S>
struct scalar_traits;

template <>
struct scalar_traits<GaussianRational> {
  static constexpr bool exact = true;
  using weight_type = mpq_class;
  static GaussianRational conj(const GaussianRational& s) { return s.conj(); }
  static bool is_zero(const GaussianRational& s) { return s.is_zero(); }
  static cplx to_complex(const GaussianRational& s) { return s.to_complex(); }
  static std::string str(const GaussianRational& s) { return s.str(); }
};

template <>
struct scalar_traits<cplx> {
  static constexpr bool exact = false;
  using weight_type = double;
  static cplx conj(const cplx& s) { return std::conj(s); }
  static bool is_zero(const cplx& s) { return s == cplx{0.0, 0.0}; }
  static cplx to_complex(const cplx& s) { return s; }
  static std::string str(const cplx& s);
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::string out;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
  return out;
}

// Splits "a+bi" / "a-bi" / "bi" / "a" into (real text, imaginary text); imaginary
// text is empty when there is no 'i'.
inline std::pair<std::string, std::string> split_complex(const std::string& s) {
  if (s.empty()) throw InputError("empty coefficient");
  if (s.back() != 'i') return {s, ""};
  std::string body = s.substr(0, s.size() - 1);
  std::size_t cut = std::string::npos;
  for (std::size_t k = body.size(); k-- > 1;) {
    if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' && body[k - 1] != 'E') {
      cut = k;
      break;
    }
  }
  std::string re = cut == std::string::npos ? "0" : body.substr(0, cut);
  std::string im = cut == std::string::npos ? body : body.substr(cut);
  if (im.empty() || im == "+") im = "1";
  if (im == "-") im = "-1";
  return {re, im};
}

inline mpq_class parse_rational(const std::string& text, std::string_view whole) {
  std::string t = text;
  if (!t.empty() && t.front() == '+') t.erase(0, 1);
  bool seen_slash = false;
  bool digit = false;
  for (std::size_t k = 0; k < t.size(); ++k) {
    const char c = t[k];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digit = true;
    } else if (c == '-' && k == 0) {
    } else if (c == '/' && !seen_slash && digit) {
      seen_slash = true;
      digit = false;
    } else {
      throw InputError("malformed rational coefficient '" + std::string(whole) + "'");
    }
  }
  if (!digit) throw InputError("malformed rational coefficient '" + std::string(whole) + "'");
  mpq_class q(t, 10);
  if (seen_slash && sgn(q.get_den()) == 0)
    throw InputError("zero denominator in '" + std::string(whole) + "'");
  q.canonicalize();
  return q;
}

inline double parse_decimal(const std::string& text, std::string_view whole) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw InputError("malformed decimal coefficient '" + std::string(whole) + "'");
  }
  if (used != text.size()) throw InputError("malformed decimal coefficient '" + std::string(whole) + "'");
  return v;
}

}  // namespace detail

inline std::string scalar_traits<cplx>::str(const cplx& s) {
  auto fmt = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string out(buf);
    if (out.find_first_of(".eEn") == std::string::npos) out += ".0";
    return out;
  };
  if (s.imag() == 0.0) return fmt(s.real());
  std::string im = fmt(s.imag()) + "i";
  return fmt(s.real()) + (s.imag() >= 0 ? "+" : "") + im;
}

/// A parsed coefficient literal. Any decimal point or exponent selects the float domain.
using Coefficient = std::variant<GaussianRational, cplx>;

inline Coefficient parse_coefficient(std::string_view literal) {
  const std::string s = detail::trim(literal);
  const auto [re, im] = detail::split_complex(s);
  const bool decimal = s.find_first_of(".eE") != std::string::npos;
  if (decimal) {
    const double r = detail::parse_decimal(re, literal);
    const double i = im.empty() ? 0.0 : detail::parse_decimal(im, literal);
    return cplx{r, i};
  }
  mpq_class r = detail::parse_rational(re, literal);
  mpq_class i = im.empty() ? mpq_class(0) : detail::parse_rational(im, literal);
  return GaussianRational(r, i);
}

}  // namespace curvlab
