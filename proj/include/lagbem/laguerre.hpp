#pragma once

// Laguerre polynomials and the Fourier-Laguerre time synthesis
//   u(t) = kappa * sum_n coeffs[n] * L_n(kappa t),
// plus a quadrature transform used as an independent oracle for expansion
// coefficients, and the closed-form coefficients of the reference time signal
// f(t) = (t^2/4) e^{1-t} driving the time-domain reconstruction experiments.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "lagbem/types.hpp"

namespace lagbem {

// Three-term recurrence (n+1)L_{n+1} = (2n+1-x)L_n - n L_{n-1}.
template <class Scalar>
Scalar laguerre_eval(int n, Scalar x) {
  if (n < 0) throw std::domain_error("laguerre_eval: negative degree");
  Scalar lm(1);
  if (n == 0) return lm;
  Scalar l = Scalar(1) - x;
  for (int k = 1; k < n; ++k) {
    const Scalar lp = ((Scalar(2 * k + 1) - x) * l - Scalar(k) * lm) / Scalar(k + 1);
    lm = l;
    l = lp;
  }
  return l;
}

// L_0(x) .. L_{count-1}(x).
template <class Scalar>
std::vector<Scalar> laguerre_all(int count, Scalar x) {
  if (count <= 0) throw std::domain_error("laguerre_all: count must be positive");
  std::vector<Scalar> out(static_cast<size_t>(count));
  out[0] = Scalar(1);
  if (count == 1) return out;
  out[1] = Scalar(1) - x;
  for (int k = 1; k + 1 < count; ++k)
    out[static_cast<size_t>(k) + 1] =
        ((Scalar(2 * k + 1) - x) * out[static_cast<size_t>(k)] - Scalar(k) * out[static_cast<size_t>(k) - 1]) /
        Scalar(k + 1);
  return out;
}

// Value may be a scalar or a fixed-size vector (anything with + and scalar *).
template <class Scalar, class Value = Scalar>
struct LaguerreSeries {
  Scalar kappa = Scalar(1);
  std::vector<Value> coeffs;
};

template <class Scalar, class Value>
Value synthesize(const LaguerreSeries<Scalar, Value>& series, Scalar t) {
  if (!(series.kappa > Scalar(0))) throw ValidationError("kappa", "must be positive");
  if (series.coeffs.empty()) throw ValidationError("coeffs", "empty expansion");
  const Scalar x = series.kappa * t;
  Scalar lm(1), l = Scalar(1) - x;
  Value acc = series.coeffs[0] * lm;
  for (size_t n = 1; n < series.coeffs.size(); ++n) {
    acc += series.coeffs[n] * l;
    const Scalar lp = ((Scalar(2 * n + 1) - x) * l - Scalar(n) * lm) / Scalar(n + 1);
    lm = l;
    l = lp;
  }
  return acc * series.kappa;
}

namespace detail {

// 16-point Gauss-Legendre rule on [-1, 1] (positive half; rule is symmetric).
inline constexpr double kGauss16X[8] = {
    0.0950125098376374401853, 0.2816035507792589132304, 0.4580167776572273863424,
    0.6178762444026437484467, 0.7554044083550030338951, 0.8656312023878317438805,
    0.9445750230732325760780, 0.9894009349916499325962};
inline constexpr double kGauss16W[8] = {
    0.1894506104550684962854, 0.1826034150449235888667, 0.1691565193950025381893,
    0.1495959888165767320815, 0.1246289712555338720525, 0.0951585116824927848099,
    0.0622535239386478928628, 0.0271524594117540948518};

}  // namespace detail

// Coefficient c_n = integral_0^inf e^{-kappa t} L_n(kappa t) f(t) dt by
// composite Gauss-Legendre on [0, T] with e^{-kappa T} < 1e-12. Oracle-grade:
// panels of width 1/(2 kappa) keep the polynomial factor resolved up to
// degree ~40.
template <class Scalar, class F>
Scalar transform_numeric(const F& f, int n, Scalar kappa) {
  if (n < 0) throw std::domain_error("transform_numeric: negative order");
  if (!(kappa > Scalar(0))) throw ValidationError("kappa", "must be positive");
  using std::exp;
  using std::isfinite;
  const Scalar width = Scalar(0.5) / kappa;
  const int panels = 60;  // covers [0, 30/kappa]; e^{-30} ~ 9.4e-14
  Scalar acc(0);
  for (int p = 0; p < panels; ++p) {
    const Scalar a = Scalar(p) * width;
    const Scalar mid = a + width / Scalar(2);
    const Scalar half = width / Scalar(2);
    for (int q = 0; q < 8; ++q) {
      for (int sgn = -1; sgn <= 1; sgn += 2) {
        const Scalar t = mid + Scalar(sgn) * half * Scalar(detail::kGauss16X[q]);
        const Scalar ft = f(t);
        if (!isfinite(ft)) throw NumericalFailure(n, "non-finite signal sample in transform");
        acc += Scalar(detail::kGauss16W[q]) * half * exp(-kappa * t) * laguerre_eval(n, kappa * t) * ft;
      }
    }
  }
  return acc;
}

// Expansion coefficients of f(t) = (t^2/4) e^{1-t} in the convention used
// throughout (kappa * sum c_n L_n(kappa t) recovers f):
//   c_n = (e / 4) (2 + kappa n (kappa (n-1) - 4)) / (kappa+1)^{n+3}.
template <class Scalar>
std::vector<Scalar> test_signal_coeffs(int count, Scalar kappa) {
  if (count <= 0) throw std::domain_error("test_signal_coeffs: count must be positive");
  if (!(kappa > Scalar(0))) throw ValidationError("kappa", "must be positive");
  using std::exp;
  using std::pow;
  std::vector<Scalar> c(static_cast<size_t>(count));
  const Scalar e1 = exp(Scalar(1));
  for (int n = 0; n < count; ++n)
    c[static_cast<size_t>(n)] = e1 / Scalar(4) *
                                (Scalar(2) + kappa * Scalar(n) * (kappa * Scalar(n - 1) - Scalar(4))) /
                                pow(kappa + Scalar(1), Scalar(n + 3));
  return c;
}

// The reference signal itself.
template <class Scalar>
Scalar test_signal(Scalar t) {
  using std::exp;
  return t * t / Scalar(4) * exp(Scalar(1) - t);
}

}  // namespace lagbem
