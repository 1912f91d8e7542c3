#include "vegbif/band_matrix.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace vegbif {

BandMatrix::BandMatrix(std::size_t n, std::size_t kl, std::size_t ku)
    : n_(n), kl_(kl), ku_(ku), width_(2 * kl + ku + 1), data_(n * (2 * kl + ku + 1), 0.0) {}

void BandMatrix::set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

void BandMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  assert(x.size() == n_ && y.size() == n_);
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t j0 = i > kl_ ? i - kl_ : 0;
    const std::size_t j1 = std::min(n_ - 1, i + ku_);
    double acc = 0.0;
    for (std::size_t j = j0; j <= j1; ++j) acc += (*this)(i, j) * x[j];
    y[i] = acc;
  }
}

void BandMatrix::scale_and_shift(double alpha, double beta) {
  for (double& v : data_) v *= alpha;
  for (std::size_t i = 0; i < n_; ++i) (*this)(i, i) += beta;
}

std::vector<double> BandMatrix::to_dense() const {
  std::vector<double> dense(n_ * n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t j0 = i > kl_ ? i - kl_ : 0;
    const std::size_t j1 = std::min(n_ - 1, i + ku_);
    for (std::size_t j = j0; j <= j1; ++j) dense[i * n_ + j] = (*this)(i, j);
  }
  return dense;
}

bool BandLU::factor(const BandMatrix& A) {
  lu_ = A;
  const std::size_t n = lu_.n_, kl = lu_.kl_, ku = lu_.ku_;
  piv_.assign(n, 0);
  ok_ = true;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t last = std::min(n - 1, k + kl);
    const std::size_t jmax = std::min(n - 1, k + kl + ku);
    std::size_t r = k;
    double best = std::abs(lu_(k, k));
    for (std::size_t i = k + 1; i <= last; ++i) {
      if (std::abs(lu_(i, k)) > best) {
        best = std::abs(lu_(i, k));
        r = i;
      }
    }
    piv_[k] = r;
    if (best == 0.0) {
      ok_ = false;
      continue;
    }
    if (r != k) {
      for (std::size_t j = k; j <= jmax; ++j) std::swap(lu_(k, j), lu_(r, j));
    }
    const double pivot = lu_(k, k);
    for (std::size_t i = k + 1; i <= last; ++i) {
      const double m = lu_(i, k) / pivot;
      lu_(i, k) = m;
      if (m == 0.0) continue;
      for (std::size_t j = k + 1; j <= jmax; ++j) lu_(i, j) -= m * lu_(k, j);
    }
  }
  return ok_;
}

void BandLU::solve(std::span<double> b) const {
  const std::size_t n = lu_.n_, kl = lu_.kl_, ku = lu_.ku_;
  assert(b.size() == n);
  for (std::size_t k = 0; k < n; ++k) {
    if (piv_[k] != k) std::swap(b[k], b[piv_[k]]);
    const std::size_t last = std::min(n - 1, k + kl);
    for (std::size_t i = k + 1; i <= last; ++i) b[i] -= lu_(i, k) * b[k];
  }
  for (std::size_t ii = n; ii-- > 0;) {
    const std::size_t jmax = std::min(n - 1, ii + kl + ku);
    double acc = b[ii];
    for (std::size_t j = ii + 1; j <= jmax; ++j) acc -= lu_(ii, j) * b[j];
    b[ii] = acc / lu_(ii, ii);
  }
}

int BandLU::determinant_sign() const {
  int sign = 1;
  for (std::size_t k = 0; k < lu_.n_; ++k) {
    if (piv_[k] != k) sign = -sign;
    const double d = lu_(k, k);
    if (d == 0.0) return 0;
    if (d < 0.0) sign = -sign;
  }
  return sign;
}

double BandLU::log_abs_determinant() const {
  double acc = 0.0;
  for (std::size_t k = 0; k < lu_.n_; ++k) acc += std::log(std::abs(lu_(k, k)));
  return acc;
}

}  // namespace vegbif
