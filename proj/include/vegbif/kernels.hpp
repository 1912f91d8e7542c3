#pragma once

// Data-parallel inner loops. Every kernel has a serial reference version and
// an OpenMP version; both evaluate the same per-element expression, so their
// outputs are bitwise identical. Without OpenMP the parallel versions run
// serially.

#include <functional>
#include <span>

#include "vegbif/band_matrix.hpp"
#include "vegbif/field.hpp"
#include "vegbif/params.hpp"

namespace vegbif::kernels {

/// Which terms of the semidiscrete right-hand side to include.
enum class Terms { all, diffusion_only };

/// Node count at and above which the dispatching entry points use the
/// OpenMP kernels.
inline constexpr int kParallelMinNodes = 4096;

bool openmp_enabled();
int max_threads();

/// du/dt for the node-major state u (size 3(N+1)); ghost-node Neumann ends.
void rhs_serial(const GridSpec& g, std::span<const double> u, double p, const ModelParams& m,
                std::span<double> out, Terms terms = Terms::all);
void rhs_parallel(const GridSpec& g, std::span<const double> u, double p, const ModelParams& m,
                  std::span<double> out, Terms terms = Terms::all);
void rhs(const GridSpec& g, std::span<const double> u, double p, const ModelParams& m,
         std::span<double> out, Terms terms = Terms::all);

/// Overwrites J (3(N+1) square, kl = ku = 3) with d(rhs)/du.
void jacobian_serial(const GridSpec& g, std::span<const double> u, double p, const ModelParams& m,
                     BandMatrix& J, Terms terms = Terms::all);
void jacobian_parallel(const GridSpec& g, std::span<const double> u, double p, const ModelParams& m,
                       BandMatrix& J, Terms terms = Terms::all);
void jacobian(const GridSpec& g, std::span<const double> u, double p, const ModelParams& m, BandMatrix& J,
              Terms terms = Terms::all);

/// out[i] = det of the mode-n matrix on the upper branch at ps[i] (domain L).
void turing_objective_samples_serial(int n, double L, const ModelParams& m, std::span<const double> ps,
                                     std::span<double> out);
void turing_objective_samples_parallel(int n, double L, const ModelParams& m, std::span<const double> ps,
                                       std::span<double> out);

/// Calls fn(n) for n = 0..n_max, possibly concurrently.
void for_each_mode_parallel(int n_max, const std::function<void(int)>& fn);

}  // namespace vegbif::kernels
