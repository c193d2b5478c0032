#pragma once

// Smooth closed boundary curves (counter-clockwise), material parameters of
// the isotropic medium, and the small local matrices the layer kernels are
// built from. The outward normal convention nu = (x2', -x1')/|x'| is tied to
// the counter-clockwise orientation; every assembly routine assumes it.

#include <cmath>
#include <functional>
#include <stdexcept>

#include "lagbem/types.hpp"

namespace lagbem {

enum class CurveKind { circle, kite, radial };

template <class Scalar>
struct ParametricCurve {
  CurveKind kind = CurveKind::circle;
  std::function<Vec2<Scalar>(Scalar)> point;
  std::function<Vec2<Scalar>(Scalar)> first_derivative;
  std::function<Vec2<Scalar>(Scalar)> second_derivative;
};

template <class Scalar>
struct MaterialParams {
  Scalar lambda, mu, rho, kappa;

  MaterialParams(Scalar lambda_, Scalar mu_, Scalar rho_, Scalar kappa_)
      : lambda(lambda_), mu(mu_), rho(rho_), kappa(kappa_) {
    if (!(mu > Scalar(0))) throw ValidationError("mu", "must be positive");
    if (!(lambda + mu > Scalar(0))) throw ValidationError("lambda", "lambda + mu must be positive");
    if (!(rho > Scalar(0))) throw ValidationError("rho", "must be positive");
    if (!(kappa > Scalar(0))) throw ValidationError("kappa", "must be positive");
  }

  Scalar c_s() const {
    using std::sqrt;
    return sqrt(mu / rho);
  }
  Scalar c_p() const {
    using std::sqrt;
    return sqrt((lambda + Scalar(2) * mu) / rho);
  }
  // Coupling weight of order-(n+1) lower terms in the transformed equation.
  Scalar beta(int n) const { return kappa * kappa * Scalar(n + 1); }
};

template <class Scalar>
ParametricCurve<Scalar> make_circle(Vec2<Scalar> center, Scalar radius) {
  if (!(radius > Scalar(0))) throw ValidationError("radius", "must be positive");
  ParametricCurve<Scalar> c;
  c.kind = CurveKind::circle;
  c.point = [center, radius](Scalar s) -> Vec2<Scalar> {
    using std::cos;
    using std::sin;
    return center + radius * Vec2<Scalar>(cos(s), sin(s));
  };
  c.first_derivative = [radius](Scalar s) -> Vec2<Scalar> {
    using std::cos;
    using std::sin;
    return radius * Vec2<Scalar>(-sin(s), cos(s));
  };
  c.second_derivative = [radius](Scalar s) -> Vec2<Scalar> {
    using std::cos;
    using std::sin;
    return radius * Vec2<Scalar>(-cos(s), -sin(s));
  };
  return c;
}

// Kite-shaped curve: x(s) = (cos s + 0.4 cos 2s, sin s).
template <class Scalar>
ParametricCurve<Scalar> make_kite() {
  ParametricCurve<Scalar> c;
  c.kind = CurveKind::kite;
  c.point = [](Scalar s) -> Vec2<Scalar> {
    using std::cos;
    using std::sin;
    return Vec2<Scalar>(cos(s) + Scalar(0.4) * cos(Scalar(2) * s), sin(s));
  };
  c.first_derivative = [](Scalar s) -> Vec2<Scalar> {
    using std::cos;
    using std::sin;
    return Vec2<Scalar>(-sin(s) - Scalar(0.8) * sin(Scalar(2) * s), cos(s));
  };
  c.second_derivative = [](Scalar s) -> Vec2<Scalar> {
    using std::cos;
    using std::sin;
    return Vec2<Scalar>(-cos(s) - Scalar(1.6) * cos(Scalar(2) * s), -sin(s));
  };
  return c;
}

// Star-shaped curve r(s)(cos s, sin s) from a radial profile with two
// derivatives. The caller supplies analytic derivatives; difference quotients
// here would poison the spectral accuracy of the quadrature.
template <class Scalar>
ParametricCurve<Scalar> make_radial(std::function<Scalar(Scalar)> r, std::function<Scalar(Scalar)> dr,
                                    std::function<Scalar(Scalar)> ddr) {
  if (!r || !dr || !ddr) throw ValidationError("radial", "profile and two derivatives are required");
  ParametricCurve<Scalar> c;
  c.kind = CurveKind::radial;
  c.point = [r](Scalar s) -> Vec2<Scalar> {
    using std::cos;
    using std::sin;
    return r(s) * Vec2<Scalar>(cos(s), sin(s));
  };
  c.first_derivative = [r, dr](Scalar s) -> Vec2<Scalar> {
    using std::cos;
    using std::sin;
    const Scalar cs = cos(s), sn = sin(s);
    return Vec2<Scalar>(dr(s) * cs - r(s) * sn, dr(s) * sn + r(s) * cs);
  };
  c.second_derivative = [r, dr, ddr](Scalar s) -> Vec2<Scalar> {
    using std::cos;
    using std::sin;
    const Scalar cs = cos(s), sn = sin(s);
    const Scalar rv = r(s), dv = dr(s), av = ddr(s);
    return Vec2<Scalar>((av - rv) * cs - Scalar(2) * dv * sn, (av - rv) * sn + Scalar(2) * dv * cs);
  };
  return c;
}

template <class Scalar>
Vec2<Scalar> outward_normal(const ParametricCurve<Scalar>& curve, Scalar s) {
  const Vec2<Scalar> d = curve.first_derivative(s);
  const Scalar len = d.norm();
  if (!(len > Scalar(0))) throw ValidationError("curve", "degenerate parametrization (|x'| = 0)");
  return Vec2<Scalar>(d(1), -d(0)) / len;
}

// J(d) = d d^T / |d|^2.
template <class Scalar>
Mat2<Scalar> matrix_J(const Vec2<Scalar>& d) {
  const Scalar r2 = d.squaredNorm();
  if (!(r2 > Scalar(0))) throw std::invalid_argument("matrix_J: zero vector");
  return d * d.transpose() / r2;
}

// Traction-related boundary matrices, d = x - y:
//   kind 1: U = lambda nu d^T + mu d nu^T + mu (nu . d) I
//   kind 2: U = (lambda + 2 mu) nu d^T + mu d nu^T + mu (nu . d) (I - 4 J(d))
template <class Scalar>
Mat2<Scalar> matrix_U(int kind, const Vec2<Scalar>& x, const Vec2<Scalar>& y, const Vec2<Scalar>& nu,
                      const MaterialParams<Scalar>& params) {
  if (kind != 1 && kind != 2) throw std::invalid_argument("matrix_U: kind must be 1 or 2");
  const Vec2<Scalar> d = x - y;
  const Scalar r2 = d.squaredNorm();
  if (!(r2 > Scalar(0))) throw std::invalid_argument("matrix_U: coincident points");
  const Scalar nd = nu.dot(d);
  Mat2<Scalar> out;
  if (kind == 1) {
    out = params.lambda * nu * d.transpose() + params.mu * d * nu.transpose();
    out += params.mu * nd * Mat2<Scalar>::Identity();
  } else {
    out = (params.lambda + Scalar(2) * params.mu) * nu * d.transpose() + params.mu * d * nu.transpose();
    out += params.mu * nd * (Mat2<Scalar>::Identity() - Scalar(4) * d * d.transpose() / r2);
  }
  return out;
}

// Coincidence limits along a curve: with t = x'(s), a = x''(s), nu = nu(s),
// the U matrices expand for small e = sigma - s as
//   U_k(x(sigma), x(s), nu(s)) = e Ut_k + (e^2/2) Uh_k + O(e^3),
// and Jt = t t^T/|t|^2 is the limit of J(x(sigma) - x(s)).
template <class Scalar>
struct LocalMatrices {
  Mat2<Scalar> Jt, Ut1, Ut2, Uh1, Uh2;
};

template <class Scalar>
LocalMatrices<Scalar> curve_local_matrices(const ParametricCurve<Scalar>& curve, Scalar s,
                                           const MaterialParams<Scalar>& params) {
  const Vec2<Scalar> t = curve.first_derivative(s);
  const Vec2<Scalar> a = curve.second_derivative(s);
  const Scalar t2 = t.squaredNorm();
  if (!(t2 > Scalar(0))) throw ValidationError("curve", "degenerate parametrization (|x'| = 0)");
  using std::sqrt;
  const Vec2<Scalar> nu = Vec2<Scalar>(t(1), -t(0)) / sqrt(t2);
  const Scalar na = nu.dot(a);  // nu . t = 0, so nu . d starts at e^2 na / 2
  LocalMatrices<Scalar> lm;
  lm.Jt = t * t.transpose() / t2;
  lm.Ut1 = params.lambda * nu * t.transpose() + params.mu * t * nu.transpose();
  lm.Ut2 = (params.lambda + Scalar(2) * params.mu) * nu * t.transpose() + params.mu * t * nu.transpose();
  lm.Uh1 = params.lambda * nu * a.transpose() + params.mu * a * nu.transpose() +
           params.mu * na * Mat2<Scalar>::Identity();
  lm.Uh2 = (params.lambda + Scalar(2) * params.mu) * nu * a.transpose() + params.mu * a * nu.transpose() +
           params.mu * na * (Mat2<Scalar>::Identity() - Scalar(4) * lm.Jt);
  return lm;
}

}  // namespace lagbem
