#include "kinvf/rational.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace kinvf {

Rational::Rational(std::int64_t n, std::int64_t d) {
  if (d == 0) throw std::domain_error("rational: zero denominator");
  if (d < 0) {
    n = -n;
    d = -d;
  }
  const std::int64_t g = std::gcd(n < 0 ? -n : n, d);
  num_ = g ? n / g : 0;
  den_ = g ? d / g : 1;
}

Rational Rational::from_double(double x, std::int64_t max_den, double tol) {
  for (std::int64_t d = 1; d <= max_den; ++d) {
    const double n = std::round(x * static_cast<double>(d));
    if (std::fabs(n / static_cast<double>(d) - x) <= tol)
      return Rational(static_cast<std::int64_t>(n), d);
  }
  throw std::domain_error("rational: value is not a small fraction");
}

std::string Rational::str() const {
  return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
}

Rational& Rational::operator+=(const Rational& o) {
  *this = Rational(num_ * o.den_ + o.num_ * den_, den_ * o.den_);
  return *this;
}

Rational& Rational::operator*=(const Rational& o) {
  *this = Rational(num_ * o.num_, den_ * o.den_);
  return *this;
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
  return a.num_ * b.den_ <=> b.num_ * a.den_;
}

}  // namespace kinvf
