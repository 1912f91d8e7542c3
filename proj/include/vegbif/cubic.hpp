#pragma once

#include <array>
#include <complex>

#include "vegbif/model.hpp"

namespace vegbif {

using Roots3 = std::array<std::complex<double>, 3>;

/// Roots of the monic cubic x^3 + c2 x^2 + c1 x + c0, sorted by descending
/// real part. Closed form (trigonometric / Cardano) with a companion-matrix
/// eigen-solve when the discriminant is close to zero; every root is then
/// polished by two Newton steps on the polynomial.
Roots3 cubic_roots(double c2, double c1, double c0);

/// Eigenvalues of a real 3x3 matrix via its characteristic polynomial.
Roots3 eigenvalues3(const Mat3& A);

}  // namespace vegbif
