#pragma once

#include <span>
#include <vector>

#include "vegbif/band_matrix.hpp"
#include "vegbif/field.hpp"
#include "vegbif/kernels.hpp"

namespace vegbif {

/// Number of sub- and super-diagonals of the semidiscrete Jacobian in
/// node-major ordering.
inline constexpr std::size_t kJacobianBandwidth = 3;

/// Method-of-lines time derivative of U. Interior nodes use the three-point
/// Laplacian; the end nodes use ghost-node reflection, giving 2(u1 - u0)/h^2
/// and 2(u_{N-1} - u_N)/h^2. T has no diffusion.
/// Throws InvalidArgument on inconsistent arrays or non-finite values.
FieldState semidiscrete_rhs(const FieldState& U, double p, const ModelParams& params,
                            kernels::Terms terms = kernels::Terms::all);

/// d(rhs)/dU as a band matrix of size 3(N+1) with kl = ku = 3.
BandMatrix semidiscrete_jacobian(const FieldState& U, double p, const ModelParams& params,
                                 kernels::Terms terms = kernels::Terms::all);

/// d(rhs)/dp in node-major order: (0, 1, -w T_i) per node.
std::vector<double> semidiscrete_dp(const FieldState& U, const ModelParams& params);
std::vector<double> semidiscrete_dp(const GridSpec& g, std::span<const double> u, const ModelParams& params);

/// Trapezoid quadrature weights h (1/2, 1, ..., 1, 1/2).
std::vector<double> trapezoid_weights(const GridSpec& g);

}  // namespace vegbif
