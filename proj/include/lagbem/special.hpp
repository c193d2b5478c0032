#pragma once

// Modified Bessel functions of order 0 and 1 via their power series, kept in
// the split form the kernel decompositions need:
//   K_0(z) = -(ln(z/2) + C) I_0(z) + S_0(z)
//   K_1(z) =  1/z + (ln(z/2) + C) I_1(z) + S_1(z)
// with S_0, S_1 the entire Macdonald series parts. Series-only: arguments are
// capped at z = 30, past which the alternating assembly of K loses accuracy
// and the caller is using the wrong tool anyway.

#include <cmath>
#include <stdexcept>
#include <string>

namespace lagbem {

struct SeriesConfig {
  int max_terms = 60;
  double rel_tol = 1e-16;
};

inline constexpr double kEuler = 0.57721566490153286061;  // Euler's constant
inline constexpr double kBesselZMax = 30.0;               // series validity cap

inline void validate_series_config(const SeriesConfig& cfg) {
  if (cfg.max_terms < 10) throw std::invalid_argument("SeriesConfig: max_terms < 10");
  if (!(cfg.rel_tol > 0) || !(cfg.rel_tol < 1e-8))
    throw std::invalid_argument("SeriesConfig: rel_tol outside (0, 1e-8)");
}

// psi(n) = sum_{m=1}^{n} 1/m, psi(0) = 0.
template <class Scalar = double>
Scalar harmonic(int n) {
  if (n < 0) throw std::domain_error("harmonic: negative index");
  Scalar h(0);
  for (int m = 1; m <= n; ++m) h += Scalar(1) / Scalar(m);
  return h;
}

namespace detail {

template <class Scalar>
void check_bessel_arg(const char* who, Scalar z, bool allow_zero) {
  if (!(z >= Scalar(0)) || (!allow_zero && z == Scalar(0)))
    throw std::domain_error(std::string(who) + ": argument must be positive");
  if (z > Scalar(kBesselZMax))
    throw std::domain_error(std::string(who) + ": argument exceeds series validity cap 30");
}

}  // namespace detail

// I_0(z) = sum_k q^k/(k!)^2,  I_1(z) = (z/2) sum_k q^k/(k!(k+1)!),  q = z^2/4.
template <class Scalar>
Scalar bessel_i(int order, Scalar z, const SeriesConfig& cfg = {}) {
  if (order != 0 && order != 1) throw std::domain_error("bessel_i: order must be 0 or 1");
  validate_series_config(cfg);
  detail::check_bessel_arg("bessel_i", z, /*allow_zero=*/true);
  const Scalar q = z * z / Scalar(4);
  Scalar term(1), sum(1);
  for (int k = 1; k < cfg.max_terms; ++k) {
    term *= q / (order == 0 ? Scalar(k) * Scalar(k) : Scalar(k) * Scalar(k + 1));
    sum += term;
    if (term <= cfg.rel_tol * sum) break;
  }
  return order == 0 ? sum : z / Scalar(2) * sum;
}

// Entire parts of the Macdonald functions:
//   S_0(z) = sum_{n>=1} psi(n)/(n!)^2 (z/2)^{2n}
//   S_1(z) = -(1/2) sum_{n>=0} (psi(n+1)+psi(n))/(n!(n+1)!) (z/2)^{2n+1}
template <class Scalar>
Scalar series_s(int order, Scalar z, const SeriesConfig& cfg = {}) {
  if (order != 0 && order != 1) throw std::domain_error("series_s: order must be 0 or 1");
  validate_series_config(cfg);
  detail::check_bessel_arg("series_s", z, /*allow_zero=*/true);
  const Scalar q = z * z / Scalar(4);
  if (order == 0) {
    Scalar psi(0), pw(1), sum(0);  // pw = q^n/(n!)^2
    for (int n = 1; n < cfg.max_terms; ++n) {
      pw *= q / (Scalar(n) * Scalar(n));
      psi += Scalar(1) / Scalar(n);
      const Scalar term = psi * pw;
      sum += term;
      if (term <= cfg.rel_tol * sum) break;
    }
    return sum;
  }
  Scalar psi(0), psi1(1);           // psi(n), psi(n+1)
  Scalar pw = z / Scalar(2);        // (z/2)^{2n+1}/(n!(n+1)!)
  Scalar sum = (psi1 + psi) * pw;   // n = 0 term
  for (int n = 1; n < cfg.max_terms; ++n) {
    pw *= q / (Scalar(n) * Scalar(n + 1));
    psi = psi1;
    psi1 += Scalar(1) / Scalar(n + 1);
    const Scalar term = (psi1 + psi) * pw;
    sum += term;
    if (term <= cfg.rel_tol * sum) break;
  }
  return -sum / Scalar(2);
}

template <class Scalar>
Scalar bessel_k(int order, Scalar z, const SeriesConfig& cfg = {}) {
  if (order != 0 && order != 1) throw std::domain_error("bessel_k: order must be 0 or 1");
  detail::check_bessel_arg("bessel_k", z, /*allow_zero=*/false);
  using std::log;
  const Scalar lf = log(z / Scalar(2)) + Scalar(kEuler);
  if (order == 0) return -lf * bessel_i(0, z, cfg) + series_s(0, z, cfg);
  return Scalar(1) / z + lf * bessel_i(1, z, cfg) + series_s(1, z, cfg);
}

// All six series values at one argument; the kernel splits consume these
// together, so evaluate them in one place.
template <class Scalar>
struct BesselParts {
  Scalar z, i0, i1, s0, s1, k0, k1;
};

template <class Scalar>
BesselParts<Scalar> bessel_parts(Scalar z, const SeriesConfig& cfg = {}) {
  detail::check_bessel_arg("bessel_parts", z, /*allow_zero=*/false);
  using std::log;
  BesselParts<Scalar> p;
  p.z = z;
  p.i0 = bessel_i(0, z, cfg);
  p.i1 = bessel_i(1, z, cfg);
  p.s0 = series_s(0, z, cfg);
  p.s1 = series_s(1, z, cfg);
  const Scalar lf = log(z / Scalar(2)) + Scalar(kEuler);
  p.k0 = -lf * p.i0 + p.s0;
  p.k1 = Scalar(1) / z + lf * p.i1 + p.s1;
  return p;
}

}  // namespace lagbem
