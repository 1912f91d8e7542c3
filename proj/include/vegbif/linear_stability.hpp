#pragma once

#include <optional>
#include <vector>

#include "vegbif/cubic.hpp"
#include "vegbif/model.hpp"

namespace vegbif {

/// Linearization of the reaction-diffusion system about a homogeneous state
/// for the Neumann mode cos(n pi x / L): A = J(u0) - diag(D_B, D_W, 0) k2.
struct ModeMatrix {
  int n = 0;
  double k2 = 0.0;  ///< (n pi / L)^2
  Mat3 A{};
};

/// Coefficients of det(lambda I - A) = lambda^3 + c2 lambda^2 + c1 lambda + c0.
struct CharCoeffs {
  double c2 = 0.0;
  double c1 = 0.0;
  double c0 = 0.0;
};

struct ModeVerdict {
  int n = 0;
  CharCoeffs coeffs;
  bool routh_hurwitz_pass = false;
  double leading_real_part = 0.0;
};

struct StabilityReport {
  std::vector<ModeVerdict> modes;
  bool stable = false;
  std::optional<int> first_violating_mode;
};

/// Uses params.L for the wavenumber. Vegetated states use the entries
/// simplified with the equilibrium relations c B W = d + s T and
/// r B^2 + l = p / W; bare soil uses its lower-triangular form.
/// Throws InvalidArgument when u0 is not an equilibrium (residual > 1e-8).
ModeMatrix mode_matrix(const HomogeneousState& u0, double p, int n, const ModelParams& params);

CharCoeffs char_coeffs(const Mat3& A);

/// c2 > 0, c0 > 0 and c2 c1 > c0, all strict.
bool routh_hurwitz(const CharCoeffs& cc);

/// Routh-Hurwitz for every mode n = 0..n_max, cross-checked against the
/// eigenvalues of each mode matrix. Throws ConsistencyError if the two
/// verdicts disagree while the leading real part is farther than 1e-9 from 0.
StabilityReport homogeneous_stability(const HomogeneousState& u0, double p, const ModelParams& params,
                                      int n_max = 64);

/// F(p, n, L) = det A evaluated on the upper vegetated branch. Its zeros are
/// the real-eigenvalue (Turing) crossings of mode n.
double turing_objective(double p, int n, double L, const ModelParams& params);

struct TuringRoots {
  int n = 0;
  std::vector<double> roots;     ///< ascending
  std::optional<double> onset;   ///< the largest root
};

/// All roots of F(., n, L) in (p_c0, p_max]: sign changes on 2001 uniform
/// samples starting at p_c0 + 1e-6, refined by bisection with secant polish.
TuringRoots turing_roots(int n, double L, const ModelParams& params, double p_max = 2.0);

/// The onset root (largest root) or nullopt.
std::optional<double> turing_locus(int n, double L, const ModelParams& params, double p_max = 2.0);

/// L with F(p_c0, 1, L) = 0, bracketed in [0.1, 20]; nullopt when there is
/// no sign change.
std::optional<double> critical_domain_size(const ModelParams& params);

struct TuringScanRow {
  int n = 0;
  std::vector<double> roots;
  std::optional<double> onset;
};

/// turing_roots for n = 0..n_max. Modes are evaluated concurrently.
std::vector<TuringScanRow> turing_scan(double L, int n_max, const ModelParams& params, double p_max = 2.0);

}  // namespace vegbif
