#include "tucker/tensor.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "tucker/errors.hpp"

namespace tucker {

namespace {

void check_mode(int mode) {
  if (mode < 1 || mode > 3) {
    throw std::invalid_argument("mode must be 1, 2 or 3, got " + std::to_string(mode));
  }
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                     " does not match " + shape_string());
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::string DenseMatrix::shape_string() const {
  return "[" + std::to_string(rows_) + "x" + std::to_string(cols_) + "]";
}

DenseTensor3::DenseTensor3(std::size_t dim1, std::size_t dim2, std::size_t dim3, double fill)
    : dim1_(dim1), dim2_(dim2), dim3_(dim3), data_(dim1 * dim2 * dim3, fill) {}

DenseTensor3::DenseTensor3(std::size_t dim1, std::size_t dim2, std::size_t dim3,
                           std::vector<double> data)
    : dim1_(dim1), dim2_(dim2), dim3_(dim3), data_(std::move(data)) {
  if (data_.size() != dim1_ * dim2_ * dim3_) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match " + shape_string());
  }
}

std::size_t DenseTensor3::dim(int mode) const {
  check_mode(mode);
  return mode == 1 ? dim1_ : mode == 2 ? dim2_ : dim3_;
}

std::string DenseTensor3::shape_string() const {
  return "[" + std::to_string(dim1_) + "x" + std::to_string(dim2_) + "x" +
         std::to_string(dim3_) + "]";
}

DenseTensor3 mode_n_product(const DenseTensor3& t, const DenseMatrix& m, int mode) {
  check_mode(mode);
  if (m.cols() != t.dim(mode)) {
    throw ShapeError("mode-" + std::to_string(mode) + " product: tensor " + t.shape_string() +
                     " incompatible with matrix " + m.shape_string());
  }
  const std::size_t d1 = t.dim1(), d2 = t.dim2(), d3 = t.dim3();
  switch (mode) {
    case 1: {
      DenseTensor3 out(m.rows(), d2, d3);
      const std::size_t slab = d2 * d3;
      for (std::size_t p = 0; p < m.rows(); ++p) {
        double* dst = out.data().data() + p * slab;
        for (std::size_t i = 0; i < d1; ++i) {
          const double w = m(p, i);
          const double* src = t.data().data() + i * slab;
          for (std::size_t x = 0; x < slab; ++x) dst[x] += w * src[x];
        }
      }
      return out;
    }
    case 2: {
      DenseTensor3 out(d1, m.rows(), d3);
      for (std::size_t i = 0; i < d1; ++i) {
        for (std::size_t p = 0; p < m.rows(); ++p) {
          double* dst = &out(i, p, 0);
          for (std::size_t j = 0; j < d2; ++j) {
            const double w = m(p, j);
            const double* src = t.data().data() + DenseTensor3::offset(i, j, 0, d2, d3);
            for (std::size_t k = 0; k < d3; ++k) dst[k] += w * src[k];
          }
        }
      }
      return out;
    }
    default: {
      DenseTensor3 out(d1, d2, m.rows());
      for (std::size_t i = 0; i < d1; ++i) {
        for (std::size_t j = 0; j < d2; ++j) {
          const double* src = t.data().data() + DenseTensor3::offset(i, j, 0, d2, d3);
          double* dst = &out(i, j, 0);
          for (std::size_t p = 0; p < m.rows(); ++p) {
            double acc = 0.0;
            for (std::size_t k = 0; k < d3; ++k) acc += m(p, k) * src[k];
            dst[p] = acc;
          }
        }
      }
      return out;
    }
  }
}

DenseMatrix mode_n_vec_product(const DenseTensor3& t, std::span<const double> v, int mode) {
  check_mode(mode);
  if (v.size() != t.dim(mode)) {
    throw ShapeError("mode-" + std::to_string(mode) + " vector product: tensor " +
                     t.shape_string() + " incompatible with vector of length " +
                     std::to_string(v.size()));
  }
  const std::size_t d1 = t.dim1(), d2 = t.dim2(), d3 = t.dim3();
  switch (mode) {
    case 1: {
      DenseMatrix out(d2, d3);
      const std::size_t slab = d2 * d3;
      for (std::size_t i = 0; i < d1; ++i) {
        const double w = v[i];
        if (w == 0.0) continue;
        const double* src = t.data().data() + i * slab;
        double* dst = out.data().data();
        for (std::size_t x = 0; x < slab; ++x) dst[x] += w * src[x];
      }
      return out;
    }
    case 2: {
      DenseMatrix out(d1, d3);
      for (std::size_t i = 0; i < d1; ++i) {
        double* dst = out.row(i).data();
        for (std::size_t j = 0; j < d2; ++j) {
          const double w = v[j];
          if (w == 0.0) continue;
          const double* src = t.data().data() + DenseTensor3::offset(i, j, 0, d2, d3);
          for (std::size_t k = 0; k < d3; ++k) dst[k] += w * src[k];
        }
      }
      return out;
    }
    default: {
      DenseMatrix out(d1, d2);
      for (std::size_t i = 0; i < d1; ++i) {
        for (std::size_t j = 0; j < d2; ++j) {
          const double* fiber = t.data().data() + DenseTensor3::offset(i, j, 0, d2, d3);
          out(i, j) = dot(std::span<const double>(fiber, d3), v);
        }
      }
      return out;
    }
  }
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + a.shape_string() + " x " + b.shape_string());
  }
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* dst = out.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double w = a(i, k);
      const double* src = b.row(k).data();
      for (std::size_t j = 0; j < b.cols(); ++j) dst[j] += w * src[j];
    }
  }
  return out;
}

DenseMatrix transpose(const DenseMatrix& m) {
  DenseMatrix out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  return out;
}

double frobenius_norm(std::span<const double> values) {
  double acc = 0.0;
  for (double v : values) acc += v * v;
  return std::sqrt(acc);
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("dot: lengths " + std::to_string(a.size()) + " and " +
                     std::to_string(b.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace tucker
