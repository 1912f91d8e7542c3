#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace vegbif {

/// Square band matrix with kl sub- and ku super-diagonals. Storage keeps kl
/// extra super-diagonals so that BandLU can pivot in place.
class BandMatrix {
 public:
  BandMatrix() = default;
  BandMatrix(std::size_t n, std::size_t kl, std::size_t ku);

  std::size_t size() const { return n_; }
  std::size_t lower() const { return kl_; }
  std::size_t upper() const { return ku_; }

  bool in_band(std::size_t i, std::size_t j) const {
    return j + kl_ >= i && j <= i + ku_;
  }

  /// Entry (i, j); requires in_band(i, j).
  double& operator()(std::size_t i, std::size_t j) { return data_[index(i, j)]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[index(i, j)]; }

  /// Entry (i, j), zero outside the band.
  double at(std::size_t i, std::size_t j) const { return in_band(i, j) ? (*this)(i, j) : 0.0; }

  void set_zero();

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const;

  /// A <- alpha A + beta I
  void scale_and_shift(double alpha, double beta);

  /// Row-major dense copy, for tests and small dense eigen-solves.
  std::vector<double> to_dense() const;

 private:
  friend class BandLU;
  std::size_t index(std::size_t i, std::size_t j) const { return i * width_ + (j + kl_ - i); }
  // Column range stored for row i: [i - kl, i + kl + ku]; (i, j) at offset j - i + kl.
  std::size_t n_ = 0, kl_ = 0, ku_ = 0, width_ = 0;
  std::vector<double> data_;
};

/// LU factorization with partial pivoting of a BandMatrix (LAPACK gbtf2 style,
/// row interchanges within the band).
class BandLU {
 public:
  BandLU() = default;
  explicit BandLU(const BandMatrix& A) { factor(A); }

  /// Returns false if an exactly zero pivot is met; the factors are then
  /// still usable for determinant sign queries but not for solves.
  bool factor(const BandMatrix& A);

  bool ok() const { return ok_; }
  std::size_t size() const { return lu_.n_; }

  /// Solves A x = b in place.
  void solve(std::span<double> b) const;

  /// Sign of det(A): +1, -1 or 0.
  int determinant_sign() const;
  double log_abs_determinant() const;

 private:
  BandMatrix lu_;
  std::vector<std::size_t> piv_;
  bool ok_ = false;
};

}  // namespace vegbif
