#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace tucker {

/// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  /// Takes ownership of `data`, which must hold rows * cols entries.
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static DenseMatrix identity(std::size_t n);

  [[nodiscard]] std::size_t rows() const { return rows_; }
  [[nodiscard]] std::size_t cols() const { return cols_; }
  [[nodiscard]] std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  [[nodiscard]] std::span<double> row(std::size_t i) {
    return {data_.data() + i * cols_, cols_};
  }
  [[nodiscard]] std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  [[nodiscard]] std::span<double> data() { return data_; }
  [[nodiscard]] std::span<const double> data() const { return data_; }

  [[nodiscard]] std::string shape_string() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Rank-3 dense tensor. Entry (i, j, k) lives at ((i * dim2) + j) * dim3 + k;
/// checkpoints depend on this layout.
class DenseTensor3 {
 public:
  DenseTensor3() = default;
  DenseTensor3(std::size_t dim1, std::size_t dim2, std::size_t dim3, double fill = 0.0);
  DenseTensor3(std::size_t dim1, std::size_t dim2, std::size_t dim3, std::vector<double> data);

  [[nodiscard]] std::size_t dim1() const { return dim1_; }
  [[nodiscard]] std::size_t dim2() const { return dim2_; }
  [[nodiscard]] std::size_t dim3() const { return dim3_; }
  /// Size along mode 1, 2 or 3.
  [[nodiscard]] std::size_t dim(int mode) const;
  [[nodiscard]] std::size_t size() const { return data_.size(); }

  [[nodiscard]] static std::size_t offset(std::size_t i, std::size_t j, std::size_t k,
                                          std::size_t dim2, std::size_t dim3) {
    return ((i * dim2) + j) * dim3 + k;
  }

  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data_[offset(i, j, k, dim2_, dim3_)];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[offset(i, j, k, dim2_, dim3_)];
  }

  [[nodiscard]] std::span<double> data() { return data_; }
  [[nodiscard]] std::span<const double> data() const { return data_; }

  [[nodiscard]] std::string shape_string() const;

  friend bool operator==(const DenseTensor3&, const DenseTensor3&) = default;

 private:
  std::size_t dim1_ = 0;
  std::size_t dim2_ = 0;
  std::size_t dim3_ = 0;
  std::vector<double> data_;
};

/// t ×_mode m: result[..p..] = sum_i m(p, i) * t[..i..].
DenseTensor3 mode_n_product(const DenseTensor3& t, const DenseMatrix& m, int mode);

/// t ×_mode v. The contracted mode disappears; the remaining two modes keep
/// their relative order (mode 1 -> dim2 x dim3, mode 2 -> dim1 x dim3,
/// mode 3 -> dim1 x dim2).
DenseMatrix mode_n_vec_product(const DenseTensor3& t, std::span<const double> v, int mode);

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

DenseMatrix transpose(const DenseMatrix& m);

double frobenius_norm(std::span<const double> values);

double dot(std::span<const double> a, std::span<const double> b);

}  // namespace tucker
