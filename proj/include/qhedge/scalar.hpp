#ifndef QHEDGE_SCALAR_HPP
#define QHEDGE_SCALAR_HPP

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <string_view>

#include "qhedge/errors.hpp"

namespace qhedge {

/*
 * Arbitrary-precision rational, the exact-arithmetic scalar backend.
 * Thin value wrapper over GMP's mpq_class; always kept canonical.
 * The float backend is plain double; generic code talks to either
 * through ScalarOps<T> below.
 */
class Rational {
 public:
  Rational() : v_(0) {}
  Rational(int n) : v_(n) {}
  Rational(long n) : v_(n) {}
  Rational(long long num, long long den = 1) {
    if (den == 0) throw InputError("rational with zero denominator");
    v_ = mpq_class(to_mpz(num), to_mpz(den));
    v_.canonicalize();
  }
  explicit Rational(mpq_class q) : v_(std::move(q)) { v_.canonicalize(); }

  // Accepts "p/q", integer, and decimal strings ("-3", "0.25", "1e-3", "88/25").
  static Rational parse(std::string_view s);

  // Exact value of a double (every finite double is a dyadic rational).
  static Rational from_double(double x) {
    if (!std::isfinite(x)) throw InputError("non-finite double for exact arithmetic");
    mpq_class q;
    mpq_set_d(q.get_mpq_t(), x);
    return Rational(q);
  }

  std::string str() const { return v_.get_str(); }  // "p/q" or "p"
  double to_double() const { return v_.get_d(); }
  int sign() const { return sgn(v_); }
  const mpq_class& raw() const { return v_; }

  Rational operator-() const { return Rational(mpq_class(-v_)); }
  Rational& operator+=(const Rational& o) { v_ += o.v_; return *this; }
  Rational& operator-=(const Rational& o) { v_ -= o.v_; return *this; }
  Rational& operator*=(const Rational& o) { v_ *= o.v_; return *this; }
  Rational& operator/=(const Rational& o) {
    if (o.sign() == 0) throw MathError("rational division by zero");
    v_ /= o.v_;
    return *this;
  }

  friend Rational operator+(Rational a, const Rational& b) { return a += b; }
  friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
  friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
  friend Rational operator/(Rational a, const Rational& b) { return a /= b; }

  friend bool operator==(const Rational& a, const Rational& b) { return a.v_ == b.v_; }
  friend bool operator!=(const Rational& a, const Rational& b) { return a.v_ != b.v_; }
  friend bool operator<(const Rational& a, const Rational& b) { return a.v_ < b.v_; }
  friend bool operator<=(const Rational& a, const Rational& b) { return a.v_ <= b.v_; }
  friend bool operator>(const Rational& a, const Rational& b) { return a.v_ > b.v_; }
  friend bool operator>=(const Rational& a, const Rational& b) { return a.v_ >= b.v_; }

  friend std::ostream& operator<<(std::ostream& os, const Rational& r) {
    return os << r.str();
  }

 private:
  static mpz_class to_mpz(long long n) {
    if (n >= std::numeric_limits<long>::min() && n <= std::numeric_limits<long>::max())
      return mpz_class(static_cast<long>(n));
    return mpz_class(std::to_string(n));
  }

  mpq_class v_;
};

inline Rational abs(const Rational& r) { return r.sign() < 0 ? -r : r; }

// Exact square root; defined only for perfect rational squares.
inline Rational sqrt_exact(const Rational& r) {
  if (r.sign() < 0) throw MathError("sqrt of negative rational");
  const mpz_class num = r.raw().get_num();
  const mpz_class den = r.raw().get_den();
  if (!mpz_perfect_square_p(num.get_mpz_t()) || !mpz_perfect_square_p(den.get_mpz_t()))
    throw IrrationalSqrt("rational " + r.str() + " has no exact square root");
  mpz_class sn, sd;
  mpz_sqrt(sn.get_mpz_t(), num.get_mpz_t());
  mpz_sqrt(sd.get_mpz_t(), den.get_mpz_t());
  return Rational(mpq_class(sn, sd));
}

inline Rational Rational::parse(std::string_view s) {
  auto fail = [&] { throw ParseError("cannot parse number '" + std::string(s) + "'"); };
  if (s.empty()) fail();

  const auto slash = s.find('/');
  if (slash != std::string_view::npos) {
    const std::string num(s.substr(0, slash));
    const std::string den(s.substr(slash + 1));
    mpz_class n, d;
    if (num.empty() || den.empty() || n.set_str(num, 10) != 0 || d.set_str(den, 10) != 0) fail();
    if (d == 0) throw ParseError("zero denominator in '" + std::string(s) + "'");
    return Rational(mpq_class(n, d));
  }

  // [sign] digits [. digits] [e [sign] digits]
  std::size_t i = 0;
  bool neg = false;
  if (s[i] == '+' || s[i] == '-') {
    neg = s[i] == '-';
    ++i;
  }
  std::string digits;
  long frac_digits = 0;
  bool any = false;
  for (; i < s.size() && s[i] >= '0' && s[i] <= '9'; ++i) {
    digits += s[i];
    any = true;
  }
  if (i < s.size() && s[i] == '.') {
    ++i;
    for (; i < s.size() && s[i] >= '0' && s[i] <= '9'; ++i) {
      digits += s[i];
      ++frac_digits;
      any = true;
    }
  }
  long exp10 = 0;
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    ++i;
    bool eneg = false;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
      eneg = s[i] == '-';
      ++i;
    }
    bool edigit = false;
    for (; i < s.size() && s[i] >= '0' && s[i] <= '9'; ++i) {
      exp10 = exp10 * 10 + (s[i] - '0');
      edigit = true;
    }
    if (!edigit) fail();
    if (eneg) exp10 = -exp10;
  }
  if (!any || i != s.size()) fail();

  mpz_class mantissa(digits.empty() ? "0" : digits, 10);
  if (neg) mantissa = -mantissa;
  const long net = exp10 - frac_digits;
  mpz_class pow10;
  mpz_ui_pow_ui(pow10.get_mpz_t(), 10, static_cast<unsigned long>(net < 0 ? -net : net));
  mpq_class q = net < 0 ? mpq_class(mantissa, pow10) : mpq_class(mantissa * pow10, 1);
  return Rational(q);
}

template <class T>
struct ScalarOps;

template <>
struct ScalarOps<double> {
  static constexpr bool kExact = false;
  static double from_fraction(long long p, long long q) {
    return static_cast<double>(p) / static_cast<double>(q);
  }
  static double parse(std::string_view s) {
    // reuse the exact parser so "p/q" strings work in float mode too
    return Rational::parse(s).to_double();
  }
  static std::string format(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
  }
  static double sqrt(double x) {
    if (x < 0) throw MathError("sqrt of negative value");
    return std::sqrt(x);
  }
  static double abs(double x) { return std::fabs(x); }
  static double to_double(double x) { return x; }
  static bool finite(double x) { return std::isfinite(x); }
};

template <>
struct ScalarOps<Rational> {
  static constexpr bool kExact = true;
  static Rational from_fraction(long long p, long long q) { return Rational(p, q); }
  static Rational parse(std::string_view s) { return Rational::parse(s); }
  static std::string format(const Rational& r) { return r.str(); }
  static Rational sqrt(const Rational& r) { return sqrt_exact(r); }
  static Rational abs(const Rational& r) { return qhedge::abs(r); }
  static double to_double(const Rational& r) { return r.to_double(); }
  static bool finite(const Rational&) { return true; }
};

template <class T>
T frac(long long p, long long q) {
  return ScalarOps<T>::from_fraction(p, q);
}

template <class T>
T pow_int(T base, int e) {
  if (e < 0) return T(1) / pow_int(base, -e);
  T out(1);
  while (e > 0) {
    if (e & 1) out *= base;
    base *= base;
    e >>= 1;
  }
  return out;
}

}  // namespace qhedge

#endif  // QHEDGE_SCALAR_HPP
