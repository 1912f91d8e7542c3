#include "vegbif/cubic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace vegbif {

namespace {

using cplx = std::complex<double>;

cplx eval(double c2, double c1, double c0, cplx x) { return ((x + c2) * x + c1) * x + c0; }
cplx deriv(double c2, double c1, cplx x) { return (3.0 * x + 2.0 * c2) * x + c1; }

Roots3 companion_roots(double c2, double c1, double c0) {
  Eigen::Matrix3d C;
  C << -c2, -c1, -c0,
        1.0, 0.0, 0.0,
        0.0, 1.0, 0.0;
  Eigen::EigenSolver<Eigen::Matrix3d> es(C, false);
  const auto ev = es.eigenvalues();
  return {ev(0), ev(1), ev(2)};
}

}  // namespace

Roots3 cubic_roots(double c2, double c1, double c0) {
  const double shift = c2 / 3.0;
  const double p = c1 - c2 * c2 / 3.0;
  const double q = 2.0 * c2 * c2 * c2 / 27.0 - c2 * c1 / 3.0 + c0;
  const double disc = -(4.0 * p * p * p + 27.0 * q * q);
  const double scale = 4.0 * std::abs(p * p * p) + 27.0 * q * q;

  Roots3 roots;
  if (scale == 0.0) {
    roots = {cplx(-shift), cplx(-shift), cplx(-shift)};
  } else if (std::abs(disc) <= 1e-10 * scale) {
    roots = companion_roots(c2, c1, c0);
  } else if (disc > 0.0) {
    const double m = 2.0 * std::sqrt(-p / 3.0);
    const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
    const double theta = std::acos(arg) / 3.0;
    for (int j = 0; j < 3; ++j) {
      roots[j] = cplx(m * std::cos(theta - 2.0 * std::numbers::pi * j / 3.0) - shift);
    }
  } else {
    const double s = std::sqrt(q * q / 4.0 + p * p * p / 27.0);
    const double u = std::cbrt(-q / 2.0 + s);
    const double v = std::cbrt(-q / 2.0 - s);
    const double re = -(u + v) / 2.0 - shift;
    const double im = std::sqrt(3.0) / 2.0 * (u - v);
    roots = {cplx(u + v - shift), cplx(re, im), cplx(re, -im)};
  }

  for (auto& x : roots) {
    for (int it = 0; it < 2; ++it) {
      const cplx f = eval(c2, c1, c0, x);
      const cplx df = deriv(c2, c1, x);
      if (std::abs(df) == 0.0) break;
      const cplx next = x - f / df;
      if (std::abs(eval(c2, c1, c0, next)) < std::abs(f)) x = next;
    }
    if (std::abs(x.imag()) <= 1e-14 * std::max(1.0, std::abs(x.real()))) x.imag(0.0);
  }
  std::sort(roots.begin(), roots.end(), [](const cplx& a, const cplx& b) {
    return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
  });
  return roots;
}

Roots3 eigenvalues3(const Mat3& A) {
  const double tr = A[0][0] + A[1][1] + A[2][2];
  double tr2 = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) tr2 += A[i][j] * A[j][i];
  const double det = A[0][0] * (A[1][1] * A[2][2] - A[1][2] * A[2][1]) -
                     A[0][1] * (A[1][0] * A[2][2] - A[1][2] * A[2][0]) +
                     A[0][2] * (A[1][0] * A[2][1] - A[1][1] * A[2][0]);
  return cubic_roots(-tr, 0.5 * (tr * tr - tr2), -det);
}

}  // namespace vegbif
