#include "fgcl/kernels.hpp"

#include "fgcl/error.hpp"

namespace fgcl::kernels {
namespace {

void check_mm(const Tensor& a, const Tensor& b, const Tensor& out) {
  if (a.cols() != b.rows() || out.rows() != a.rows() || out.cols() != b.cols()) {
    throw ShapeError("matmul: " + a.shape_str() + " * " + b.shape_str() + " -> " +
                     out.shape_str());
  }
}

void check_tn(const Tensor& a, const Tensor& b, const Tensor& out) {
  if (a.rows() != b.rows() || out.rows() != a.cols() || out.cols() != b.cols()) {
    throw ShapeError("matmul_tn: " + a.shape_str() + "^T * " + b.shape_str() +
                     " -> " + out.shape_str());
  }
}

void check_nt(const Tensor& a, const Tensor& b, const Tensor& out) {
  if (a.cols() != b.cols() || out.rows() != a.rows() || out.cols() != b.rows()) {
    throw ShapeError("matmul_nt: " + a.shape_str() + " * " + b.shape_str() +
                     "^T -> " + out.shape_str());
  }
}

// Row i of a*b, accumulated k-major.
inline void mm_row(const Tensor& a, const Tensor& b, Tensor& out, std::size_t i) {
  const std::size_t n = b.cols();
  double* o = &out(i, 0);
  for (std::size_t j = 0; j < n; ++j) o[j] = 0.0;
  for (std::size_t k = 0; k < a.cols(); ++k) {
    const double aik = a(i, k);
    const double* brow = &b.data()[k * n];
    for (std::size_t j = 0; j < n; ++j) o[j] += aik * brow[j];
  }
}

// Row i of out += a^T b, i.e. sum over r of a(r,i) * b(r,:).
inline void tn_row(const Tensor& a, const Tensor& b, Tensor& out, std::size_t i) {
  const std::size_t n = b.cols();
  double* o = &out(i, 0);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double ari = a(r, i);
    const double* brow = &b.data()[r * n];
    for (std::size_t j = 0; j < n; ++j) o[j] += ari * brow[j];
  }
}

// Row i of out += a b^T.
inline void nt_row(const Tensor& a, const Tensor& b, Tensor& out, std::size_t i) {
  const std::size_t inner = a.cols();
  const double* arow = &a.data()[i * inner];
  for (std::size_t j = 0; j < b.rows(); ++j) {
    const double* brow = &b.data()[j * inner];
    double s = 0.0;
    for (std::size_t k = 0; k < inner; ++k) s += arow[k] * brow[k];
    out(i, j) += s;
  }
}

long work(std::size_t a, std::size_t b, std::size_t c) {
  return static_cast<long>(a) * static_cast<long>(b) * static_cast<long>(c);
}

}  // namespace

void matmul_serial(const Tensor& a, const Tensor& b, Tensor& out) {
  check_mm(a, b, out);
  for (std::size_t i = 0; i < a.rows(); ++i) mm_row(a, b, out, i);
}

void matmul(const Tensor& a, const Tensor& b, Tensor& out) {
  check_mm(a, b, out);
  const long rows = static_cast<long>(a.rows());
#pragma omp parallel for schedule(static) if (work(a.rows(), a.cols(), b.cols()) >= kParallelWork)
  for (long i = 0; i < rows; ++i) mm_row(a, b, out, static_cast<std::size_t>(i));
}

void matmul_tn_acc_serial(const Tensor& a, const Tensor& b, Tensor& out) {
  check_tn(a, b, out);
  for (std::size_t i = 0; i < a.cols(); ++i) tn_row(a, b, out, i);
}

void matmul_tn_acc(const Tensor& a, const Tensor& b, Tensor& out) {
  check_tn(a, b, out);
  const long rows = static_cast<long>(a.cols());
#pragma omp parallel for schedule(static) if (work(a.rows(), a.cols(), b.cols()) >= kParallelWork)
  for (long i = 0; i < rows; ++i) tn_row(a, b, out, static_cast<std::size_t>(i));
}

void matmul_nt_acc_serial(const Tensor& a, const Tensor& b, Tensor& out) {
  check_nt(a, b, out);
  for (std::size_t i = 0; i < a.rows(); ++i) nt_row(a, b, out, i);
}

void matmul_nt_acc(const Tensor& a, const Tensor& b, Tensor& out) {
  check_nt(a, b, out);
  const long rows = static_cast<long>(a.rows());
#pragma omp parallel for schedule(static) if (work(a.rows(), a.cols(), b.rows()) >= kParallelWork)
  for (long i = 0; i < rows; ++i) nt_row(a, b, out, static_cast<std::size_t>(i));
}

void axpy_serial(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw ShapeError("axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw ShapeError("axpy: length mismatch");
  const long n = static_cast<long>(x.size());
#pragma omp parallel for schedule(static) if (n >= kParallelWork)
  for (long i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace fgcl::kernels
