#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fgcl/param_store.hpp"
#include "fgcl/tensor.hpp"

// Tensor-level reverse-mode automatic differentiation.
//
// A Tape records every primitive in execution order, so recording order is
// already a topological order and backward() is a single reverse sweep.
// One tape is used by one thread; build a fresh tape per training step.
namespace fgcl::nn {

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  // Value of a 1x1 node.
  double item() const;
};

enum class Op : std::uint8_t {
  kLeaf,
  kMatMul,
  kAdd,
  kAddRow,
  kSub,
  kHadamard,
  kScale,
  kRelu,
  kSigmoid,
  kSum,
  kMeanRows,
  kConcatRows,
  kTranspose,
  kCosine,
  kLogSumExpRow,
  kBceWithLogits,
};

std::string_view op_name(Op op);

// Parameters registered on a tape, in ParamStore order.
class BoundParams {
 public:
  void add(std::string name, Var v) { vars_.emplace_back(std::move(name), v); }
  Var at(std::string_view name) const;
  auto begin() const { return vars_.begin(); }
  auto end() const { return vars_.end(); }
  std::size_t size() const { return vars_.size(); }

 private:
  std::vector<std::pair<std::string, Var>> vars_;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var parameter(std::string name, Tensor value);
  BoundParams bind(const ParamStore& params);

  const Tensor& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
  std::size_t size() const { return nodes_.size(); }

  // Appends a node computed by a primitive. Throws NumericError if the value
  // is not finite. Primitives call this; user code should not need to.
  Var record(Op op, std::span<const Var> inputs, Tensor value, double scalar = 0.0,
             Tensor aux0 = {}, Tensor aux1 = {});

 private:
  struct Node {
    Op op = Op::kLeaf;
    std::vector<int> inputs;
    Tensor value;
    double scalar = 0.0;
    Tensor aux0;
    Tensor aux1;
    bool requires_grad = false;
    std::string param_name;
  };

  std::vector<Node> nodes_;
  std::vector<int> params_;

  friend ParamStore backward(const Tape& tape, Var loss);
};

// Gradients of a scalar loss with respect to every parameter on the tape,
// keyed by parameter name in registration order. Parameters that do not
// reach the loss get zero gradients.
ParamStore backward(const Tape& tape, Var loss);

// ---- primitives -----------------------------------------------------------

Var matmul(Var a, Var b);
Var add(Var a, Var b);
// a (r x c) + b (1 x c), b broadcast over rows.
Var add_row(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var scalar_scale(Var a, double s);
Var relu(Var a);
Var sigmoid(Var a);
// 1x1 sum of all entries.
Var sum(Var a);
// Column means: (r x c) -> (1 x c).
Var mean_rows(Var a);
// Stack inputs with equal column counts vertically.
Var concat_rows(std::span<const Var> parts);
Var concat_rows(std::initializer_list<Var> parts);
Var transpose(Var a);
// <a, b> / (|a| |b|) for two 1 x h rows, norms floored at kNormFloor.
Var cosine_similarity(Var a, Var b);
// Per-row log-sum-exp: (r x c) -> (r x 1).
Var logsumexp_row(Var a);
// Mean sigmoid cross-entropy over entries with mask = 1. Throws
// ArgumentError if nothing is observed.
Var bce_with_logits(Var logits, const Tensor& labels, const Tensor& mask);

inline constexpr double kNormFloor = 1e-12;

// Numerically safe logistic function.
double sigmoid_scalar(double z);

}  // namespace fgcl::nn
