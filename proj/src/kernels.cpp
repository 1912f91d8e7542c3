#include "vegbif/kernels.hpp"

#include <cassert>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "vegbif/linear_stability.hpp"

namespace vegbif::kernels {

namespace {

// One node of the right-hand side. Neighbour sums are formed as (left + right)
// so that reflecting the grid leaves every value bit-identical.
inline void rhs_node(int i, int N, double inv_h2, const double* u, double p, const ModelParams& m, double* out,
                     Terms terms) {
  const int il = i == 0 ? 1 : i - 1;
  const int ir = i == N ? N - 1 : i + 1;
  const double B = u[3 * i], W = u[3 * i + 1], T = u[3 * i + 2];
  const double lapB = ((u[3 * il] + u[3 * ir]) - 2.0 * B) * inv_h2;
  const double lapW = ((u[3 * il + 1] + u[3 * ir + 1]) - 2.0 * W) * inv_h2;
  if (terms == Terms::diffusion_only) {
    out[3 * i] = m.D_B * lapB;
    out[3 * i + 1] = m.D_W * lapW;
    out[3 * i + 2] = 0.0;
    return;
  }
  const double loss = m.d + m.s * T;
  const double B2W = B * B * W;
  out[3 * i] = m.D_B * lapB + (m.c * B2W - loss * B);
  out[3 * i + 1] = m.D_W * lapW + (p - m.r * B2W - m.l * W);
  out[3 * i + 2] = m.q * loss * B - (m.k + m.w * p) * T;
}

inline void jacobian_node(int i, int N, double inv_h2, const double* u, double p, const ModelParams& m,
                          BandMatrix& J, Terms terms) {
  const std::size_t r = 3 * static_cast<std::size_t>(i);
  for (std::size_t a = 0; a < 3; ++a) {
    const std::size_t j0 = r + a >= 3 ? r + a - 3 : 0;
    const std::size_t j1 = std::min(J.size() - 1, r + a + 3);
    for (std::size_t j = j0; j <= j1; ++j) J(r + a, j) = 0.0;
  }
  if (terms == Terms::all) {
    const double B = u[r], W = u[r + 1], T = u[r + 2];
    const double loss = m.d + m.s * T;
    J(r, r) = 2.0 * m.c * B * W - loss;
    J(r, r + 1) = m.c * B * B;
    J(r, r + 2) = -m.s * B;
    J(r + 1, r) = -2.0 * m.r * B * W;
    J(r + 1, r + 1) = -m.r * B * B - m.l;
    J(r + 2, r) = m.q * loss;
    J(r + 2, r + 2) = m.q * m.s * B - (m.k + m.w * p);
  }
  const double diff[2] = {m.D_B * inv_h2, m.D_W * inv_h2};
  for (std::size_t a = 0; a < 2; ++a) {
    const std::size_t row = r + a;
    J(row, row) += -2.0 * diff[a];
    if (i == 0) {
      J(row, row + 3) += 2.0 * diff[a];
    } else if (i == N) {
      J(row, row - 3) += 2.0 * diff[a];
    } else {
      J(row, row - 3) += diff[a];
      J(row, row + 3) += diff[a];
    }
  }
}

void check_sizes(const GridSpec& g, std::span<const double> u, std::size_t out_size) {
  assert(u.size() == g.unknowns() && out_size == g.unknowns());
  (void)g;
  (void)u;
  (void)out_size;
}

}  // namespace

bool openmp_enabled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void rhs_serial(const GridSpec& g, std::span<const double> u, double p, const ModelParams& m,
                std::span<double> out, Terms terms) {
  check_sizes(g, u, out.size());
  const double inv_h2 = 1.0 / (g.h() * g.h());
  for (int i = 0; i <= g.N; ++i) rhs_node(i, g.N, inv_h2, u.data(), p, m, out.data(), terms);
}

void rhs_parallel(const GridSpec& g, std::span<const double> u, double p, const ModelParams& m,
                  std::span<double> out, Terms terms) {
  check_sizes(g, u, out.size());
  const double inv_h2 = 1.0 / (g.h() * g.h());
  const int N = g.N;
  const double* uu = u.data();
  double* oo = out.data();
#pragma omp parallel for schedule(static)
  for (int i = 0; i <= N; ++i) rhs_node(i, N, inv_h2, uu, p, m, oo, terms);
}

void rhs(const GridSpec& g, std::span<const double> u, double p, const ModelParams& m, std::span<double> out,
         Terms terms) {
  if (g.nodes() >= kParallelMinNodes) {
    rhs_parallel(g, u, p, m, out, terms);
  } else {
    rhs_serial(g, u, p, m, out, terms);
  }
}

void jacobian_serial(const GridSpec& g, std::span<const double> u, double p, const ModelParams& m, BandMatrix& J,
                     Terms terms) {
  check_sizes(g, u, J.size());
  const double inv_h2 = 1.0 / (g.h() * g.h());
  for (int i = 0; i <= g.N; ++i) jacobian_node(i, g.N, inv_h2, u.data(), p, m, J, terms);
}

void jacobian_parallel(const GridSpec& g, std::span<const double> u, double p, const ModelParams& m,
                       BandMatrix& J, Terms terms) {
  check_sizes(g, u, J.size());
  const double inv_h2 = 1.0 / (g.h() * g.h());
  const int N = g.N;
  const double* uu = u.data();
  // Each node writes only its own three rows.
#pragma omp parallel for schedule(static)
  for (int i = 0; i <= N; ++i) jacobian_node(i, N, inv_h2, uu, p, m, J, terms);
}

void jacobian(const GridSpec& g, std::span<const double> u, double p, const ModelParams& m, BandMatrix& J,
              Terms terms) {
  if (g.nodes() >= kParallelMinNodes) {
    jacobian_parallel(g, u, p, m, J, terms);
  } else {
    jacobian_serial(g, u, p, m, J, terms);
  }
}

void turing_objective_samples_serial(int n, double L, const ModelParams& m, std::span<const double> ps,
                                     std::span<double> out) {
  for (std::size_t i = 0; i < ps.size(); ++i) out[i] = turing_objective(ps[i], n, L, m);
}

void turing_objective_samples_parallel(int n, double L, const ModelParams& m, std::span<const double> ps,
                                       std::span<double> out) {
  const auto count = static_cast<long>(ps.size());
  std::exception_ptr failure;
  std::mutex guard;
#pragma omp parallel for schedule(static)
  for (long i = 0; i < count; ++i) {
    try {
      out[i] = turing_objective(ps[i], n, L, m);
    } catch (...) {
      std::lock_guard<std::mutex> lock(guard);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

void for_each_mode_parallel(int n_max, const std::function<void(int)>& fn) {
  std::exception_ptr failure;
  std::mutex guard;
#pragma omp parallel for schedule(dynamic)
  for (int n = 0; n <= n_max; ++n) {
    try {
      fn(n);
    } catch (...) {
      std::lock_guard<std::mutex> lock(guard);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace vegbif::kernels
