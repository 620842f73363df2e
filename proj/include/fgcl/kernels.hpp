#pragma once

#include <span>

#include "fgcl/tensor.hpp"

// Dense inner loops used by the autodiff engine, the optimizer and FedAvg.
//
// Every kernel has a `serial` reference and an OpenMP version. The OpenMP
// versions split work by output row (or output element), and each output
// element is accumulated in the same order as the serial reference, so the
// two agree bit for bit regardless of thread count.
namespace fgcl::kernels {

// out = a * b
void matmul_serial(const Tensor& a, const Tensor& b, Tensor& out);
void matmul(const Tensor& a, const Tensor& b, Tensor& out);

// out += a^T * b
void matmul_tn_acc_serial(const Tensor& a, const Tensor& b, Tensor& out);
void matmul_tn_acc(const Tensor& a, const Tensor& b, Tensor& out);

// out += a * b^T
void matmul_nt_acc_serial(const Tensor& a, const Tensor& b, Tensor& out);
void matmul_nt_acc(const Tensor& a, const Tensor& b, Tensor& out);

// y += alpha * x
void axpy_serial(double alpha, std::span<const double> x, std::span<double> y);
void axpy(double alpha, std::span<const double> x, std::span<double> y);

// Work (multiply-adds) above which the OpenMP kernels fork threads.
inline constexpr long kParallelWork = 1L << 15;

}  // namespace fgcl::kernels
