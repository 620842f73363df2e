#include "fgcl/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "fgcl/error.hpp"
#include "fgcl/kernels.hpp"

namespace fgcl::nn {
namespace {

Tape& tape_of(std::span<const Var> vars, Op op) {
  Tape* t = nullptr;
  for (const Var& v : vars) {
    if (v.tape == nullptr) {
      throw ArgumentError(std::string(op_name(op)) + ": unbound variable");
    }
    if (t != nullptr && t != v.tape) {
      throw ArgumentError(std::string(op_name(op)) + ": operands live on different tapes");
    }
    t = v.tape;
  }
  return *t;
}

[[noreturn]] void shape_fail(Op op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op_name(op)) + ": incompatible shapes " + a.shape_str() +
                   " and " + b.shape_str());
}

void require_same(Op op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) shape_fail(op, a, b);
}

void require_row(Op op, const Tensor& a) {
  if (a.rows() != 1) {
    throw ShapeError(std::string(op_name(op)) + ": expected a 1 x h row, got " + a.shape_str());
  }
}

double norm(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Var unary(Op op, Var a, Tensor value, double scalar = 0.0) {
  const Var in[] = {a};
  return tape_of(in, op).record(op, in, std::move(value), scalar);
}

Var binary(Op op, Var a, Var b, Tensor value) {
  const Var in[] = {a, b};
  return tape_of(in, op).record(op, in, std::move(value));
}

}  // namespace

std::string_view op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kMatMul: return "matmul";
    case Op::kAdd: return "add";
    case Op::kAddRow: return "add_row";
    case Op::kSub: return "sub";
    case Op::kHadamard: return "hadamard";
    case Op::kScale: return "scalar_scale";
    case Op::kRelu: return "relu";
    case Op::kSigmoid: return "sigmoid";
    case Op::kSum: return "sum";
    case Op::kMeanRows: return "mean_rows";
    case Op::kConcatRows: return "concat_rows";
    case Op::kTranspose: return "transpose";
    case Op::kCosine: return "cosine_similarity";
    case Op::kLogSumExpRow: return "logsumexp_row";
    case Op::kBceWithLogits: return "bce_with_logits";
  }
  return "?";
}

double sigmoid_scalar(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

const Tensor& Var::value() const {
  if (tape == nullptr) throw ArgumentError("unbound variable");
  return tape->value(*this);
}

double Var::item() const {
  const Tensor& t = value();
  if (t.size() != 1) throw ShapeError("item: expected 1x1, got " + t.shape_str());
  return t[0];
}

Var BoundParams::at(std::string_view name) const {
  for (const auto& [n, v] : vars_) {
    if (n == name) return v;
  }
  throw ArgumentError("bound params: no parameter '" + std::string(name) + "'");
}

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw NumericError("constant: non-finite value");
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::parameter(std::string name, Tensor value) {
  if (!value.all_finite()) throw NumericError("parameter '" + name + "': non-finite value");
  for (int id : params_) {
    if (nodes_[static_cast<std::size_t>(id)].param_name == name) {
      throw ArgumentError("tape: duplicate parameter '" + name + "'");
    }
  }
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  n.param_name = std::move(name);
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size() - 1);
  params_.push_back(id);
  return {this, id};
}

BoundParams Tape::bind(const ParamStore& params) {
  BoundParams b;
  for (const auto& [name, t] : params) b.add(name, parameter(name, t));
  return b;
}

Var Tape::record(Op op, std::span<const Var> inputs, Tensor value, double scalar, Tensor aux0,
                 Tensor aux1) {
  if (!value.all_finite()) {
    throw NumericError(std::string(op_name(op)) + ": non-finite result");
  }
  Node n;
  n.op = op;
  n.value = std::move(value);
  n.scalar = scalar;
  n.aux0 = std::move(aux0);
  n.aux1 = std::move(aux1);
  n.inputs.reserve(inputs.size());
  for (const Var& v : inputs) {
    n.inputs.push_back(v.id);
    n.requires_grad = n.requires_grad || nodes_[static_cast<std::size_t>(v.id)].requires_grad;
  }
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size() - 1)};
}

// ---- forward ---------------------------------------------------------------

Var matmul(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.cols() != y.rows()) shape_fail(Op::kMatMul, x, y);
  Tensor out(x.rows(), y.cols());
  kernels::matmul(x, y, out);
  return binary(Op::kMatMul, a, b, std::move(out));
}

Var add(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require_same(Op::kAdd, x, y);
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[i];
  return binary(Op::kAdd, a, b, std::move(out));
}

Var add_row(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (y.rows() != 1 || y.cols() != x.cols()) shape_fail(Op::kAddRow, x, y);
  Tensor out = x;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) += y[j];
  return binary(Op::kAddRow, a, b, std::move(out));
}

Var sub(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require_same(Op::kSub, x, y);
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= y[i];
  return binary(Op::kSub, a, b, std::move(out));
}

Var hadamard(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require_same(Op::kHadamard, x, y);
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= y[i];
  return binary(Op::kHadamard, a, b, std::move(out));
}

Var scalar_scale(Var a, double s) {
  Tensor out = a.value();
  for (double& v : out.data()) v *= s;
  return unary(Op::kScale, a, std::move(out), s);
}

Var relu(Var a) {
  Tensor out = a.value();
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return unary(Op::kRelu, a, std::move(out));
}

Var sigmoid(Var a) {
  Tensor out = a.value();
  for (double& v : out.data()) v = sigmoid_scalar(v);
  return unary(Op::kSigmoid, a, std::move(out));
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return unary(Op::kSum, a, Tensor(1, 1, s));
}

Var mean_rows(Var a) {
  const Tensor& x = a.value();
  if (x.rows() == 0) throw ShapeError("mean_rows: no rows");
  Tensor out(1, x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out[j] += x(i, j);
  const double inv = 1.0 / static_cast<double>(x.rows());
  for (double& v : out.data()) v *= inv;
  return unary(Op::kMeanRows, a, std::move(out));
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ArgumentError("concat_rows: no inputs");
  Tape& tape = tape_of(parts, Op::kConcatRows);
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) shape_fail(Op::kConcatRows, parts.front().value(), p.value());
    rows += p.rows();
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  for (const Var& p : parts) {
    data.insert(data.end(), p.value().data().begin(), p.value().data().end());
  }
  return tape.record(Op::kConcatRows, parts, Tensor(rows, cols, std::move(data)));
}

Var concat_rows(std::initializer_list<Var> parts) {
  return concat_rows(std::span<const Var>(parts.begin(), parts.size()));
}

Var transpose(Var a) { return unary(Op::kTranspose, a, a.value().transposed()); }

Var cosine_similarity(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require_row(Op::kCosine, x);
  require_same(Op::kCosine, x, y);
  const double na = std::max(norm(x), kNormFloor);
  const double nb = std::max(norm(y), kNormFloor);
  return binary(Op::kCosine, a, b, Tensor(1, 1, dot(x, y) / (na * nb)));
}

Var logsumexp_row(Var a) {
  const Tensor& x = a.value();
  if (x.cols() == 0) throw ShapeError("logsumexp_row: no columns");
  Tensor out(x.rows(), 1);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double m = x(i, 0);
    for (std::size_t j = 1; j < x.cols(); ++j) m = std::max(m, x(i, j));
    double s = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) s += std::exp(x(i, j) - m);
    out(i, 0) = m + std::log(s);
  }
  return unary(Op::kLogSumExpRow, a, std::move(out));
}

Var bce_with_logits(Var logits, const Tensor& labels, const Tensor& mask) {
  const Tensor& z = logits.value();
  require_same(Op::kBceWithLogits, z, labels);
  require_same(Op::kBceWithLogits, z, mask);
  double total = 0.0;
  double observed = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (mask[i] == 0.0) continue;
    total += std::max(z[i], 0.0) - z[i] * labels[i] + std::log1p(std::exp(-std::abs(z[i])));
    observed += 1.0;
  }
  if (observed == 0.0) throw ArgumentError("bce_with_logits: every task is masked");
  const Var in[] = {logits};
  return tape_of(in, Op::kBceWithLogits)
      .record(Op::kBceWithLogits, in, Tensor(1, 1, total / observed), observed, labels, mask);
}

// ---- backward --------------------------------------------------------------

ParamStore backward(const Tape& tape, Var loss) {
  if (loss.tape != &tape) throw ArgumentError("backward: loss is not on this tape");
  const auto& nodes = tape.nodes_;
  const Tensor& lv = nodes[static_cast<std::size_t>(loss.id)].value;
  if (lv.size() != 1) throw ArgumentError("backward: loss must be scalar, got " + lv.shape_str());

  std::vector<Tensor> grad(nodes.size());
  auto g_of = [&](int id) -> Tensor* {
    const auto& n = nodes[static_cast<std::size_t>(id)];
    if (!n.requires_grad) return nullptr;
    Tensor& g = grad[static_cast<std::size_t>(id)];
    if (g.empty() && !n.value.empty()) g = Tensor(n.value.rows(), n.value.cols());
    return &g;
  };

  if (nodes[static_cast<std::size_t>(loss.id)].requires_grad) {
    *g_of(loss.id) = Tensor(1, 1, 1.0);
  }

  for (int id = loss.id; id >= 0; --id) {
    const auto& n = nodes[static_cast<std::size_t>(id)];
    const Tensor& g = grad[static_cast<std::size_t>(id)];
    if (!n.requires_grad || g.empty() || n.op == Op::kLeaf) continue;
    const auto in = [&](std::size_t k) -> const Tensor& {
      return nodes[static_cast<std::size_t>(n.inputs[k])].value;
    };

    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kMatMul: {
        if (Tensor* ga = g_of(n.inputs[0])) kernels::matmul_nt_acc(g, in(1), *ga);
        if (Tensor* gb = g_of(n.inputs[1])) kernels::matmul_tn_acc(in(0), g, *gb);
        break;
      }
      case Op::kAdd:
      case Op::kSub: {
        const double sign = n.op == Op::kSub ? -1.0 : 1.0;
        if (Tensor* ga = g_of(n.inputs[0])) kernels::axpy(1.0, g.data(), ga->data());
        if (Tensor* gb = g_of(n.inputs[1])) kernels::axpy(sign, g.data(), gb->data());
        break;
      }
      case Op::kAddRow: {
        if (Tensor* ga = g_of(n.inputs[0])) kernels::axpy(1.0, g.data(), ga->data());
        if (Tensor* gb = g_of(n.inputs[1])) {
          for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) (*gb)[j] += g(i, j);
        }
        break;
      }
      case Op::kHadamard: {
        if (Tensor* ga = g_of(n.inputs[0])) {
          for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * in(1)[i];
        }
        if (Tensor* gb = g_of(n.inputs[1])) {
          for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * in(0)[i];
        }
        break;
      }
      case Op::kScale: {
        if (Tensor* ga = g_of(n.inputs[0])) kernels::axpy(n.scalar, g.data(), ga->data());
        break;
      }
      case Op::kRelu: {
        if (Tensor* ga = g_of(n.inputs[0])) {
          const Tensor& x = in(0);
          for (std::size_t i = 0; i < g.size(); ++i) {
            if (x[i] > 0.0) (*ga)[i] += g[i];
          }
        }
        break;
      }
      case Op::kSigmoid: {
        if (Tensor* ga = g_of(n.inputs[0])) {
          for (std::size_t i = 0; i < g.size(); ++i) {
            const double y = n.value[i];
            (*ga)[i] += g[i] * y * (1.0 - y);
          }
        }
        break;
      }
      case Op::kSum: {
        if (Tensor* ga = g_of(n.inputs[0])) {
          for (double& v : ga->data()) v += g[0];
        }
        break;
      }
      case Op::kMeanRows: {
        if (Tensor* ga = g_of(n.inputs[0])) {
          const double inv = 1.0 / static_cast<double>(ga->rows());
          for (std::size_t i = 0; i < ga->rows(); ++i)
            for (std::size_t j = 0; j < ga->cols(); ++j) (*ga)(i, j) += g[j] * inv;
        }
        break;
      }
      case Op::kConcatRows: {
        std::size_t offset = 0;
        for (int input : n.inputs) {
          const Tensor& part = nodes[static_cast<std::size_t>(input)].value;
          if (Tensor* gp = g_of(input)) {
            for (std::size_t k = 0; k < part.size(); ++k) (*gp)[k] += g[offset + k];
          }
          offset += part.size();
        }
        break;
      }
      case Op::kTranspose: {
        if (Tensor* ga = g_of(n.inputs[0])) {
          for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) (*ga)(j, i) += g(i, j);
        }
        break;
      }
      case Op::kCosine: {
        const Tensor& a = in(0);
        const Tensor& b = in(1);
        const double ra = norm(a);
        const double rb = norm(b);
        const double na = std::max(ra, kNormFloor);
        const double nb = std::max(rb, kNormFloor);
        const double d = dot(a, b);
        // d/da [d / (na nb)] with the floored norm treated as constant.
        const auto side = [&](const Tensor& self, const Tensor& other, double r_self,
                              double n_self, double n_other, Tensor& out) {
          const double coef_other = g[0] / (n_self * n_other);
          const double coef_self =
              r_self > kNormFloor ? g[0] * d / (n_self * n_self * n_other * r_self) : 0.0;
          for (std::size_t k = 0; k < self.size(); ++k) {
            out[k] += coef_other * other[k] - coef_self * self[k];
          }
        };
        if (Tensor* ga = g_of(n.inputs[0])) side(a, b, ra, na, nb, *ga);
        if (Tensor* gb = g_of(n.inputs[1])) side(b, a, rb, nb, na, *gb);
        break;
      }
      case Op::kLogSumExpRow: {
        if (Tensor* ga = g_of(n.inputs[0])) {
          const Tensor& x = in(0);
          for (std::size_t i = 0; i < x.rows(); ++i)
            for (std::size_t j = 0; j < x.cols(); ++j)
              (*ga)(i, j) += g[i] * std::exp(x(i, j) - n.value[i]);
        }
        break;
      }
      case Op::kBceWithLogits: {
        if (Tensor* ga = g_of(n.inputs[0])) {
          const Tensor& z = in(0);
          const double scale = g[0] / n.scalar;
          for (std::size_t k = 0; k < z.size(); ++k) {
            if (n.aux1[k] == 0.0) continue;
            (*ga)[k] += scale * (sigmoid_scalar(z[k]) - n.aux0[k]);
          }
        }
        break;
      }
    }
  }

  ParamStore out;
  for (int id : tape.params_) {
    const auto& n = nodes[static_cast<std::size_t>(id)];
    Tensor g = grad[static_cast<std::size_t>(id)];
    if (g.empty()) g = Tensor(n.value.rows(), n.value.cols());
    out.add(n.param_name, std::move(g));
  }
  return out;
}

}  // namespace fgcl::nn
