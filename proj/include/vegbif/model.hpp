#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "vegbif/params.hpp"

namespace vegbif {

/// (B, W, T): biomass, soil water, toxic compounds, all kg/m^2.
using Triple = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

/// Reaction rates (f, g, h) of the local kinetics.
///
///   f = c B^2 W - (d + s T) B
///   g = p - r B^2 W - l W
///   h = q (d + s T) B - (k + w p) T
Triple reaction(const Triple& u, double p, const ModelParams& params);

/// Closed-form partial derivatives of (f, g, h) with respect to (B, W, T).
Mat3 reaction_jacobian(const Triple& u, double p, const ModelParams& params);

/// Derivative of (f, g, h) with respect to the precipitation rate.
Triple reaction_dp(const Triple& u, const ModelParams& params);

/// Coefficients of a2 B^2 + a1 B + a0 = 0, whose roots are the biomass of the
/// vegetated homogeneous equilibria.
struct QuadraticCoeffs {
  double a2 = 0.0;
  double a1 = 0.0;
  double a0 = 0.0;
  double discriminant = 0.0;
};

QuadraticCoeffs quadratic_coeffs(double p, const ModelParams& params);

enum class BranchTag { bare_soil, upper, lower };

std::string_view to_string(BranchTag tag);

struct HomogeneousState {
  double B = 0.0;
  double W = 0.0;
  double T = 0.0;
  BranchTag tag = BranchTag::bare_soil;

  Triple triple() const { return {B, W, T}; }
};

/// Bare soil always; upper and lower vegetated states when the discriminant
/// is positive; a single state tagged `upper` at the double root
/// (|disc| <= 1e-10 a1^2). Roots with B < 0 are dropped and described in
/// `diagnostics` when it is non-null.
std::vector<HomogeneousState> homogeneous_equilibria(double p, const ModelParams& params,
                                                     std::vector<std::string>* diagnostics = nullptr);

/// The upper vegetated equilibrium, or bare soil if none exists.
HomogeneousState upper_equilibrium(double p, const ModelParams& params);

/// Smallest positive p at which the discriminant vanishes (the saddle-node
/// of the homogeneous vegetated states). Throws InvalidArgument if there is
/// none below p = 1e3.
double fold_precipitation(const ModelParams& params);

/// max-norm of the reaction rates at u.
double reaction_residual(const Triple& u, double p, const ModelParams& params);

}  // namespace vegbif
