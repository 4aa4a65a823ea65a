#include "gcr/tape.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace gcr::diff {

namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

ConstMap as_matrix(const Tensor& t) {
  return ConstMap(t.values().data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

MutMap as_matrix(Tensor& t) {
  return MutMap(t.values().data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}

[[noreturn]] void shape_error(Primitive op, const Tensor& a, const Tensor* b,
                              const std::string& detail) {
  std::string msg = std::string(primitive_name(op)) + ": " + detail + " (got " +
                    a.shape_string();
  if (b) msg += " and " + b->shape_string();
  throw std::invalid_argument(msg + ")");
}

template <typename F>
Tensor map_unary(const Tensor& a, F f) {
  Tensor out(a.shape());
  auto in = a.values();
  auto o = out.values();
  for (std::size_t i = 0; i < in.size(); ++i) o[i] = f(in[i]);
  return out;
}

template <typename F>
Tensor map_binary(const Tensor& a, const Tensor& b, F f) {
  Tensor out(a.shape());
  auto x = a.values();
  auto y = b.values();
  auto o = out.values();
  for (std::size_t i = 0; i < x.size(); ++i) o[i] = f(x[i], y[i]);
  return out;
}

void accumulate(std::vector<Tensor>& adj, std::size_t id, const Tensor& shape_of,
                auto&& fill) {
  if (adj[id].size() == 0) adj[id] = Tensor(shape_of.shape(), 0.0);
  fill(adj[id].values());
}

}  // namespace

const char* primitive_name(Primitive p) {
  switch (p) {
    case Primitive::kLeaf: return "leaf";
    case Primitive::kMatMul: return "matmul";
    case Primitive::kAdd: return "add";
    case Primitive::kAddBias: return "add_bias";
    case Primitive::kMul: return "mul";
    case Primitive::kTanh: return "tanh";
    case Primitive::kExp: return "exp";
    case Primitive::kLog: return "log";
    case Primitive::kClamp: return "clamp";
    case Primitive::kSum: return "sum";
    case Primitive::kSumRows: return "sum_rows";
    case Primitive::kMean: return "mean";
    case Primitive::kMin: return "min";
    case Primitive::kSquare: return "square";
  }
  return "unknown";
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id >= nodes_.size()) throw std::out_of_range("tape: unknown variable");
  return nodes_[v.id];
}

Var Tape::push(Node n) {
  if (consumed_) throw std::logic_error("tape: cannot record after backward");
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

Var Tape::parameter(Tensor value) {
  Node n;
  n.is_parameter = true;
  n.param_index = param_nodes_.size();
  n.value = std::move(value);
  Var v = push(std::move(n));
  param_nodes_.push_back(v.id);
  return v;
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  const Tensor& x = node(a).value;
  const Tensor& y = node(b).value;
  if (x.rank() != 2 || y.rank() != 2 || x.cols() != y.rows()) {
    shape_error(Primitive::kMatMul, x, &y, "expected [n,m] x [m,p]");
  }
  Tensor out({x.rows(), y.cols()});
  as_matrix(out).noalias() = as_matrix(x) * as_matrix(y);
  Node n;
  n.op = Primitive::kMatMul;
  n.lhs = a.id;
  n.rhs = b.id;
  n.value = std::move(out);
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  const Tensor& x = node(a).value;
  const Tensor& y = node(b).value;
  if (!x.same_shape(y)) shape_error(Primitive::kAdd, x, &y, "shapes differ");
  Node n;
  n.op = Primitive::kAdd;
  n.lhs = a.id;
  n.rhs = b.id;
  n.value = map_binary(x, y, [](double p, double q) { return p + q; });
  return push(std::move(n));
}

Var Tape::add_bias(Var a, Var bias) {
  const Tensor& x = node(a).value;
  const Tensor& b = node(bias).value;
  if (x.rank() != 2 || b.rank() != 1 || b.size() != x.cols()) {
    shape_error(Primitive::kAddBias, x, &b, "expected [n,m] + [m]");
  }
  Tensor out = x;
  const std::size_t cols = x.cols();
  auto o = out.values();
  auto bv = b.values();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) o[r * cols + c] += bv[c];
  }
  Node n;
  n.op = Primitive::kAddBias;
  n.lhs = a.id;
  n.rhs = bias.id;
  n.value = std::move(out);
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  const Tensor& x = node(a).value;
  const Tensor& y = node(b).value;
  if (!x.same_shape(y)) shape_error(Primitive::kMul, x, &y, "shapes differ");
  Node n;
  n.op = Primitive::kMul;
  n.lhs = a.id;
  n.rhs = b.id;
  n.value = map_binary(x, y, [](double p, double q) { return p * q; });
  return push(std::move(n));
}

Var Tape::min(Var a, Var b) {
  const Tensor& x = node(a).value;
  const Tensor& y = node(b).value;
  if (!x.same_shape(y)) shape_error(Primitive::kMin, x, &y, "shapes differ");
  Node n;
  n.op = Primitive::kMin;
  n.lhs = a.id;
  n.rhs = b.id;
  n.value = map_binary(x, y, [](double p, double q) { return p <= q ? p : q; });
  return push(std::move(n));
}

Var Tape::tanh(Var a) {
  Node n;
  n.op = Primitive::kTanh;
  n.lhs = a.id;
  n.value = map_unary(node(a).value, [](double v) { return std::tanh(v); });
  return push(std::move(n));
}

Var Tape::exp(Var a) {
  Node n;
  n.op = Primitive::kExp;
  n.lhs = a.id;
  n.value = map_unary(node(a).value, [](double v) { return std::exp(v); });
  return push(std::move(n));
}

Var Tape::log(Var a) {
  Node n;
  n.op = Primitive::kLog;
  n.lhs = a.id;
  n.value = map_unary(node(a).value, [](double v) { return std::log(v); });
  return push(std::move(n));
}

Var Tape::clamp(Var a, double lo, double hi) {
  if (!(lo <= hi)) {
    throw std::invalid_argument("clamp: lower bound exceeds upper bound");
  }
  Node n;
  n.op = Primitive::kClamp;
  n.lhs = a.id;
  n.lo = lo;
  n.hi = hi;
  n.value = map_unary(node(a).value,
                      [lo, hi](double v) { return std::clamp(v, lo, hi); });
  return push(std::move(n));
}

Var Tape::square(Var a) {
  Node n;
  n.op = Primitive::kSquare;
  n.lhs = a.id;
  n.value = map_unary(node(a).value, [](double v) { return v * v; });
  return push(std::move(n));
}

Var Tape::sum(Var a) {
  const auto v = node(a).value.values();
  double s = 0.0;
  for (double x : v) s += x;
  Node n;
  n.op = Primitive::kSum;
  n.lhs = a.id;
  n.value = Tensor::scalar(s);
  return push(std::move(n));
}

Var Tape::mean(Var a) {
  const Tensor& x = node(a).value;
  double s = 0.0;
  for (double v : x.values()) s += v;
  Node n;
  n.op = Primitive::kMean;
  n.lhs = a.id;
  n.value = Tensor::scalar(s / static_cast<double>(x.size()));
  return push(std::move(n));
}

Var Tape::sum_rows(Var a) {
  const Tensor& x = node(a).value;
  if (x.rank() != 2) shape_error(Primitive::kSumRows, x, nullptr, "expected [n,m]");
  Tensor out({x.rows()});
  const std::size_t cols = x.cols();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += x.at(r, c);
    out[r] = s;
  }
  Node n;
  n.op = Primitive::kSumRows;
  n.lhs = a.id;
  n.value = std::move(out);
  return push(std::move(n));
}

Var Tape::scale(Var a, double factor) {
  return mul(a, constant(Tensor(node(a).value.shape(), factor)));
}

Var Tape::sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

Var Tape::add_constant(Var a, double offset) {
  return add(a, constant(Tensor(node(a).value.shape(), offset)));
}

void Tape::begin_backward(Var output, const char* caller) {
  if (consumed_) {
    throw std::logic_error(std::string(caller) + ": tape already consumed");
  }
  if (output.id >= nodes_.size()) {
    throw std::out_of_range(std::string(caller) + ": unknown output variable");
  }
  consumed_ = true;
}

namespace {

// Marks nodes that depend on at least one parameter; adjoints are only
// propagated into those.
template <typename NodeVec>
std::vector<char> tracked_nodes(const NodeVec& nodes) {
  std::vector<char> tracked(nodes.size(), 0);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    switch (n.op) {
      case Primitive::kLeaf:
        tracked[i] = n.is_parameter;
        break;
      case Primitive::kMatMul:
      case Primitive::kAdd:
      case Primitive::kAddBias:
      case Primitive::kMul:
      case Primitive::kMin:
        tracked[i] = tracked[n.lhs] || tracked[n.rhs];
        break;
      default:
        tracked[i] = tracked[n.lhs];
        break;
    }
  }
  return tracked;
}

}  // namespace

std::vector<Tensor> Tape::backward(Var output, const Tensor& seed) {
  begin_backward(output, "backward");
  if (!seed.same_shape(nodes_[output.id].value)) {
    throw std::invalid_argument("backward: seed shape " + seed.shape_string() +
                                " does not match output shape " +
                                nodes_[output.id].value.shape_string());
  }
  const auto tracked = tracked_nodes(nodes_);
  std::vector<Tensor> adj(nodes_.size());
  adj[output.id] = seed;

  for (std::size_t i = output.id + 1; i-- > 0;) {
    if (adj[i].size() == 0 || !tracked[i]) continue;
    const Node& n = nodes_[i];
    const auto g = adj[i].values();
    switch (n.op) {
      case Primitive::kLeaf:
        break;
      case Primitive::kMatMul: {
        const Tensor& a = nodes_[n.lhs].value;
        const Tensor& b = nodes_[n.rhs].value;
        if (tracked[n.lhs]) {
          Tensor da(a.shape());
          as_matrix(da).noalias() = as_matrix(adj[i]) * as_matrix(b).transpose();
          accumulate(adj, n.lhs, a, [&](std::span<double> t) {
            for (std::size_t k = 0; k < t.size(); ++k) t[k] += da[k];
          });
        }
        if (tracked[n.rhs]) {
          Tensor db(b.shape());
          as_matrix(db).noalias() = as_matrix(a).transpose() * as_matrix(adj[i]);
          accumulate(adj, n.rhs, b, [&](std::span<double> t) {
            for (std::size_t k = 0; k < t.size(); ++k) t[k] += db[k];
          });
        }
        break;
      }
      case Primitive::kAdd:
        for (std::size_t side : {n.lhs, n.rhs}) {
          if (!tracked[side]) continue;
          accumulate(adj, side, nodes_[side].value, [&](std::span<double> t) {
            for (std::size_t k = 0; k < t.size(); ++k) t[k] += g[k];
          });
        }
        break;
      case Primitive::kAddBias: {
        if (tracked[n.lhs]) {
          accumulate(adj, n.lhs, nodes_[n.lhs].value, [&](std::span<double> t) {
            for (std::size_t k = 0; k < t.size(); ++k) t[k] += g[k];
          });
        }
        if (tracked[n.rhs]) {
          const std::size_t cols = n.value.cols();
          accumulate(adj, n.rhs, nodes_[n.rhs].value, [&](std::span<double> t) {
            for (std::size_t r = 0; r < n.value.rows(); ++r) {
              for (std::size_t c = 0; c < cols; ++c) t[c] += g[r * cols + c];
            }
          });
        }
        break;
      }
      case Primitive::kMul: {
        const auto a = nodes_[n.lhs].value.values();
        const auto b = nodes_[n.rhs].value.values();
        if (tracked[n.lhs]) {
          accumulate(adj, n.lhs, nodes_[n.lhs].value, [&](std::span<double> t) {
            for (std::size_t k = 0; k < t.size(); ++k) t[k] += g[k] * b[k];
          });
        }
        if (tracked[n.rhs]) {
          accumulate(adj, n.rhs, nodes_[n.rhs].value, [&](std::span<double> t) {
            for (std::size_t k = 0; k < t.size(); ++k) t[k] += g[k] * a[k];
          });
        }
        break;
      }
      case Primitive::kMin: {
        const auto a = nodes_[n.lhs].value.values();
        const auto b = nodes_[n.rhs].value.values();
        if (tracked[n.lhs]) {
          accumulate(adj, n.lhs, nodes_[n.lhs].value, [&](std::span<double> t) {
            for (std::size_t k = 0; k < t.size(); ++k) {
              if (a[k] <= b[k]) t[k] += g[k];
            }
          });
        }
        if (tracked[n.rhs]) {
          accumulate(adj, n.rhs, nodes_[n.rhs].value, [&](std::span<double> t) {
            for (std::size_t k = 0; k < t.size(); ++k) {
              if (!(a[k] <= b[k])) t[k] += g[k];
            }
          });
        }
        break;
      }
      case Primitive::kTanh: {
        const auto y = n.value.values();
        accumulate(adj, n.lhs, nodes_[n.lhs].value, [&](std::span<double> t) {
          for (std::size_t k = 0; k < t.size(); ++k) t[k] += g[k] * (1.0 - y[k] * y[k]);
        });
        break;
      }
      case Primitive::kExp: {
        const auto y = n.value.values();
        accumulate(adj, n.lhs, nodes_[n.lhs].value, [&](std::span<double> t) {
          for (std::size_t k = 0; k < t.size(); ++k) t[k] += g[k] * y[k];
        });
        break;
      }
      case Primitive::kLog: {
        const auto x = nodes_[n.lhs].value.values();
        accumulate(adj, n.lhs, nodes_[n.lhs].value, [&](std::span<double> t) {
          for (std::size_t k = 0; k < t.size(); ++k) t[k] += g[k] / x[k];
        });
        break;
      }
      case Primitive::kClamp: {
        const auto x = nodes_[n.lhs].value.values();
        accumulate(adj, n.lhs, nodes_[n.lhs].value, [&](std::span<double> t) {
          for (std::size_t k = 0; k < t.size(); ++k) {
            if (x[k] >= n.lo && x[k] <= n.hi) t[k] += g[k];
          }
        });
        break;
      }
      case Primitive::kSquare: {
        const auto x = nodes_[n.lhs].value.values();
        accumulate(adj, n.lhs, nodes_[n.lhs].value, [&](std::span<double> t) {
          for (std::size_t k = 0; k < t.size(); ++k) t[k] += 2.0 * x[k] * g[k];
        });
        break;
      }
      case Primitive::kSum: {
        const double s = g[0];
        accumulate(adj, n.lhs, nodes_[n.lhs].value, [&](std::span<double> t) {
          for (double& v : t) v += s;
        });
        break;
      }
      case Primitive::kMean: {
        const double s = g[0] / static_cast<double>(nodes_[n.lhs].value.size());
        accumulate(adj, n.lhs, nodes_[n.lhs].value, [&](std::span<double> t) {
          for (double& v : t) v += s;
        });
        break;
      }
      case Primitive::kSumRows: {
        const std::size_t cols = nodes_[n.lhs].value.cols();
        accumulate(adj, n.lhs, nodes_[n.lhs].value, [&](std::span<double> t) {
          for (std::size_t k = 0; k < t.size(); ++k) t[k] += g[k / cols];
        });
        break;
      }
    }
  }

  std::vector<Tensor> grads;
  grads.reserve(param_nodes_.size());
  for (std::size_t id : param_nodes_) {
    grads.push_back(adj[id].size() ? std::move(adj[id])
                                   : Tensor(nodes_[id].value.shape(), 0.0));
  }
  return grads;
}

std::vector<std::vector<Tensor>> Tape::backward_rowwise(Var output,
                                                        const Tensor& row_weights) {
  begin_backward(output, "backward_rowwise");
  const Tensor& out = nodes_[output.id].value;
  if (out.rank() != 1) {
    throw std::invalid_argument("backward_rowwise: output must be a [n] vector");
  }
  const std::size_t n_rows = out.size();
  if (row_weights.rank() != 2 || row_weights.rows() != n_rows) {
    throw std::invalid_argument("backward_rowwise: weights " +
                                row_weights.shape_string() +
                                " must be [n,K] with n = " + std::to_string(n_rows));
  }
  const std::size_t num_seeds = row_weights.cols();
  const auto tracked = tracked_nodes(nodes_);

  std::vector<std::vector<Tensor>> grads(num_seeds);
  for (auto& per_seed : grads) {
    per_seed.reserve(param_nodes_.size());
    for (std::size_t id : param_nodes_) per_seed.emplace_back(nodes_[id].value.shape(), 0.0);
  }

  auto reject = [](const Node& n, const char* why) {
    throw std::logic_error(std::string("backward_rowwise: primitive '") +
                           primitive_name(n.op) + "' " + why);
  };

  std::vector<Tensor> adj(nodes_.size());
  adj[output.id] = Tensor(out.shape(), 1.0);
  const ConstMap weights = as_matrix(row_weights);

  for (std::size_t i = output.id + 1; i-- > 0;) {
    if (adj[i].size() == 0 || !tracked[i]) continue;
    const Node& n = nodes_[i];
    if (n.op == Primitive::kLeaf) continue;
    if (n.op == Primitive::kSum || n.op == Primitive::kMean) {
      reject(n, "mixes rows");
    }
    if (n.value.rows() != n_rows) reject(n, "has a leading extent other than n");
    const bool binary = n.op == Primitive::kMatMul || n.op == Primitive::kAdd ||
                        n.op == Primitive::kAddBias || n.op == Primitive::kMul ||
                        n.op == Primitive::kMin;
    const Node& lhs = nodes_[n.lhs];
    if (lhs.is_parameter) reject(n, "consumes a parameter as its left operand");
    if (binary && nodes_[n.rhs].is_parameter) {
      const Node& param = nodes_[n.rhs];
      if (n.op == Primitive::kMatMul) {
        // dW_k = A^T diag(u_k) delta, stacked over k into one product.
        const std::size_t p = n.value.cols();
        RowMatrix scaled(static_cast<Eigen::Index>(n_rows),
                         static_cast<Eigen::Index>(num_seeds * p));
        const ConstMap delta = as_matrix(std::as_const(adj[i]));
        for (std::size_t k = 0; k < num_seeds; ++k) {
          scaled.middleCols(static_cast<Eigen::Index>(k * p),
                            static_cast<Eigen::Index>(p)) =
              weights.col(static_cast<Eigen::Index>(k)).asDiagonal() * delta;
        }
        const RowMatrix stacked = as_matrix(lhs.value).transpose() * scaled;
        for (std::size_t k = 0; k < num_seeds; ++k) {
          as_matrix(grads[k][param.param_index]) +=
              stacked.middleCols(static_cast<Eigen::Index>(k * p),
                                 static_cast<Eigen::Index>(p));
        }
      } else if (n.op == Primitive::kAddBias) {
        const RowMatrix db = weights.transpose() * as_matrix(adj[i]);
        for (std::size_t k = 0; k < num_seeds; ++k) {
          auto t = grads[k][param.param_index].values();
          for (std::size_t c = 0; c < t.size(); ++c) {
            t[c] += db(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c));
          }
        }
      } else {
        reject(n, "consumes a parameter outside matmul/add_bias");
      }
    }

    // Propagate the shared adjoint into non-parameter inputs; parameter edges
    // were handled above.
    const auto g = adj[i].values();
    switch (n.op) {
      case Primitive::kMatMul:
        if (tracked[n.lhs]) {
          const Tensor& b = nodes_[n.rhs].value;
          Tensor da(lhs.value.shape());
          as_matrix(da).noalias() = as_matrix(adj[i]) * as_matrix(b).transpose();
          accumulate(adj, n.lhs, lhs.value, [&](std::span<double> t) {
            for (std::size_t k = 0; k < t.size(); ++k) t[k] += da[k];
          });
        }
        if (tracked[n.rhs] && !nodes_[n.rhs].is_parameter) {
          reject(n, "has a parameter-dependent right operand");
        }
        break;
      case Primitive::kAddBias:
        if (tracked[n.lhs]) {
          accumulate(adj, n.lhs, lhs.value, [&](std::span<double> t) {
            for (std::size_t k = 0; k < t.size(); ++k) t[k] += g[k];
          });
        }
        if (tracked[n.rhs] && !nodes_[n.rhs].is_parameter) {
          reject(n, "has a parameter-dependent bias");
        }
        break;
      case Primitive::kAdd:
      case Primitive::kMul:
      case Primitive::kMin: {
        const auto a = lhs.value.values();
        const auto b = nodes_[n.rhs].value.values();
        for (int side = 0; side < 2; ++side) {
          const std::size_t id = side == 0 ? n.lhs : n.rhs;
          if (!tracked[id]) continue;
          accumulate(adj, id, nodes_[id].value, [&](std::span<double> t) {
            for (std::size_t k = 0; k < t.size(); ++k) {
              double d = g[k];
              if (n.op == Primitive::kMul) d *= side == 0 ? b[k] : a[k];
              if (n.op == Primitive::kMin && ((a[k] <= b[k]) != (side == 0))) d = 0.0;
              t[k] += d;
            }
          });
        }
        break;
      }
      case Primitive::kTanh: {
        const auto y = n.value.values();
        accumulate(adj, n.lhs, lhs.value, [&](std::span<double> t) {
          for (std::size_t k = 0; k < t.size(); ++k) t[k] += g[k] * (1.0 - y[k] * y[k]);
        });
        break;
      }
      case Primitive::kExp: {
        const auto y = n.value.values();
        accumulate(adj, n.lhs, lhs.value, [&](std::span<double> t) {
          for (std::size_t k = 0; k < t.size(); ++k) t[k] += g[k] * y[k];
        });
        break;
      }
      case Primitive::kLog: {
        const auto x = lhs.value.values();
        accumulate(adj, n.lhs, lhs.value, [&](std::span<double> t) {
          for (std::size_t k = 0; k < t.size(); ++k) t[k] += g[k] / x[k];
        });
        break;
      }
      case Primitive::kClamp: {
        const auto x = lhs.value.values();
        accumulate(adj, n.lhs, lhs.value, [&](std::span<double> t) {
          for (std::size_t k = 0; k < t.size(); ++k) {
            if (x[k] >= n.lo && x[k] <= n.hi) t[k] += g[k];
          }
        });
        break;
      }
      case Primitive::kSquare: {
        const auto x = lhs.value.values();
        accumulate(adj, n.lhs, lhs.value, [&](std::span<double> t) {
          for (std::size_t k = 0; k < t.size(); ++k) t[k] += 2.0 * x[k] * g[k];
        });
        break;
      }
      case Primitive::kSumRows: {
        const std::size_t cols = lhs.value.cols();
        accumulate(adj, n.lhs, lhs.value, [&](std::span<double> t) {
          for (std::size_t k = 0; k < t.size(); ++k) t[k] += g[k / cols];
        });
        break;
      }
      default:
        break;
    }
  }
  return grads;
}

void ParameterLayout::add(std::string name, std::vector<std::size_t> shape) {
  Entry e;
  e.name = std::move(name);
  e.shape = std::move(shape);
  e.offset = total_;
  e.size = 1;
  for (std::size_t d : e.shape) e.size *= d;
  total_ += e.size;
  entries_.push_back(std::move(e));
}

std::vector<double> ParameterLayout::flatten(std::span<const Tensor> tensors) const {
  if (tensors.size() != entries_.size()) {
    throw std::invalid_argument("flatten: expected " + std::to_string(entries_.size()) +
                                " tensors, got " + std::to_string(tensors.size()));
  }
  std::vector<double> flat(total_);
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (tensors[i].shape() != entries_[i].shape) {
      throw std::invalid_argument("flatten: tensor '" + entries_[i].name +
                                  "' has shape " + tensors[i].shape_string());
    }
    std::copy(tensors[i].values().begin(), tensors[i].values().end(),
              flat.begin() + static_cast<std::ptrdiff_t>(entries_[i].offset));
  }
  return flat;
}

std::vector<Tensor> ParameterLayout::unflatten(std::span<const double> flat) const {
  if (flat.size() != total_) {
    throw std::invalid_argument("unflatten: expected " + std::to_string(total_) +
                                " values, got " + std::to_string(flat.size()));
  }
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) {
    std::vector<double> data(flat.begin() + static_cast<std::ptrdiff_t>(e.offset),
                             flat.begin() + static_cast<std::ptrdiff_t>(e.offset + e.size));
    out.emplace_back(e.shape, std::move(data));
  }
  return out;
}

}  // namespace gcr::diff
