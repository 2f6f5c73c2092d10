#include "ecomp/bench.hpp"

#include <fmt/format.h>

#include <cmath>
#include <random>

namespace ecomp {

void PolySpec::validate() const {
  if (n_terms < 1)
    throw Error("poly.spec", "n_terms must be at least 1");
  if (avg_exponent < 0)
    throw Error("poly.spec", "exponents must be non-negative");
  if (!(omega_max >= omega_min) || !(phase_max >= phase_min))
    throw Error("poly.spec", "frequency and phase ranges must be ordered");
  if (!(coef_scale >= 0.0))
    throw Error("poly.spec", "coefficient scale must be non-negative");
}

double Polynomial::operator()(double x1, double x2) const {
  double f = 0.0;
  for (const auto &t : terms) {
    double v = t.c * std::pow(x1, t.p1) * std::pow(x2, t.p2);
    if (sine)
      v *= std::sin(t.omega * (x1 + x2) + t.phi);
    f += v;
  }
  return f;
}

Polynomial gen_polynomial(const PolySpec &spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<int> expo(0, 2 * spec.avg_exponent);
  std::uniform_real_distribution<double> coef(-spec.coef_scale, spec.coef_scale);
  std::uniform_real_distribution<double> omega(spec.omega_min, spec.omega_max);
  std::uniform_real_distribution<double> phase(spec.phase_min, spec.phase_max);

  Polynomial p;
  p.sine = spec.sine;
  p.terms.reserve(spec.n_terms);
  for (std::size_t t = 0; t < spec.n_terms; ++t) {
    PolyTerm term;
    term.c = coef(rng);
    term.p1 = expo(rng);
    term.p2 = expo(rng);
    term.omega = omega(rng);
    term.phi = phase(rng);
    p.terms.push_back(term);
  }
  return p;
}

namespace {

double radical_inverse(std::size_t i, unsigned base) {
  double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

} // namespace

Matrix halton_cover(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double s1 = u(rng);
  const double s2 = u(rng);
  Matrix out(static_cast<Eigen::Index>(n), 2);
  for (std::size_t k = 0; k < n; ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    out(r, 0) = std::fmod(radical_inverse(k + 1, 2) + s1, 1.0);
    out(r, 1) = std::fmod(radical_inverse(k + 1, 3) + s2, 1.0);
  }
  return out;
}

} // namespace ecomp
