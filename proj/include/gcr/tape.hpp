#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gcr/tensor.hpp"

namespace gcr::diff {

// Handle to a node recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

enum class Primitive : std::uint8_t {
  kLeaf,
  kMatMul,
  kAdd,
  kAddBias,
  kMul,
  kTanh,
  kExp,
  kLog,
  kClamp,
  kSum,
  kSumRows,
  kMean,
  kMin,
  kSquare,
};

const char* primitive_name(Primitive p);

// Records a forward computation over a closed primitive set and replays it in
// reverse to produce gradients for every parameter leaf.
//
// Nodes are appended in evaluation order, so every input id precedes its
// consumer. A tape supports exactly one backward call.
//
// Shape rules: matmul [n,m]x[m,p]; add/mul/min need identical shapes;
// add_bias broadcasts a [m] bias over the rows of [n,m]; sum and mean reduce
// to [1]; sum_rows reduces [n,m] to [n].
class Tape {
 public:
  // Gradient-tracked leaf. Parameters are numbered in registration order and
  // backward returns one gradient per parameter in that order.
  Var parameter(Tensor value);
  // Leaf that receives no gradient.
  Var constant(Tensor value);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var add_bias(Var a, Var bias);
  Var mul(Var a, Var b);
  Var tanh(Var a);
  Var exp(Var a);
  Var log(Var a);
  Var clamp(Var a, double lo, double hi);
  Var sum(Var a);
  Var sum_rows(Var a);
  Var mean(Var a);
  // Elementwise minimum; ties route the gradient to the first operand.
  Var min(Var a, Var b);
  Var square(Var a);

  // Composites built from the primitives above.
  Var scale(Var a, double factor);
  Var sub(Var a, Var b);
  Var add_constant(Var a, double offset);

  const Tensor& value(Var v) const;
  std::size_t num_parameters() const { return param_nodes_.size(); }
  std::size_t num_nodes() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

  // Returns d(output . seed)/d(param) for every parameter. Parameters with no
  // path to the output receive exact zeros. Consumes the tape.
  std::vector<Tensor> backward(Var output, const Tensor& seed);

  // Batched variant for row-separable graphs: `output` is a [n] vector whose
  // row t depends only on row t of every [n,...] intermediate, and every
  // parameter enters through the right operand of matmul or the bias of
  // add_bias. For each column k of `row_weights` ([n,K]) returns the gradient
  // of sum_t row_weights[t,k] * output[t]. One reverse sweep is shared by all
  // K seeds; only the parameter accumulations are repeated. Consumes the tape.
  std::vector<std::vector<Tensor>> backward_rowwise(Var output,
                                                    const Tensor& row_weights);

 private:
  struct Node {
    Primitive op = Primitive::kLeaf;
    std::size_t lhs = 0;
    std::size_t rhs = 0;
    double lo = 0.0;
    double hi = 0.0;
    bool is_parameter = false;
    std::size_t param_index = 0;
    Tensor value;
  };

  const Node& node(Var v) const;
  Var push(Node n);
  void begin_backward(Var output, const char* caller);

  std::vector<Node> nodes_;
  std::vector<std::size_t> param_nodes_;
  bool consumed_ = false;
};

// Fixed ordering of named parameter tensors, used to move between per-tensor
// gradients and the single flat vector the resolution step operates on.
class ParameterLayout {
 public:
  struct Entry {
    std::string name;
    std::vector<std::size_t> shape;
    std::size_t offset = 0;
    std::size_t size = 0;
  };

  ParameterLayout() = default;
  void add(std::string name, std::vector<std::size_t> shape);

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t total_size() const { return total_; }

  // Concatenation in registration order.
  std::vector<double> flatten(std::span<const Tensor> tensors) const;
  std::vector<Tensor> unflatten(std::span<const double> flat) const;

 private:
  std::vector<Entry> entries_;
  std::size_t total_ = 0;
};

}  // namespace gcr::diff
