#pragma once

#include <array>
#include <deque>
#include <cstddef>
#include <limits>
#include <string_view>
#include <vector>

#include "iae/tensor.hpp"

namespace iae {

// Handle to a node recorded on a Tape. Only meaningful for the tape that
// produced it.
struct Var {
  static constexpr std::size_t kInvalid = std::numeric_limits<std::size_t>::max();
  std::size_t id = kInvalid;
  bool valid() const { return id != kInvalid; }
};

enum class OpKind {
  kLeaf,
  kMatMul,
  kAdd,
  kSub,
  kMul,
  kAddRow,     // matrix + broadcast 1 x cols row
  kAddCol,     // matrix + broadcast rows x 1 column
  kScale,      // x * c
  kAddScalar,  // x + c
  kRelu,
  kElu,
  kTanh,
  kSquare,
  kSqrt,
  kExp,
  kSum,
  kMean,
  kConcatCols,
  kGatherRows,
  kPairwiseSqdist,
  kSoftminRows,
  kSoftminCols,
  kEntropicPlan,
};

std::string_view op_name(OpKind kind);

// Eager reverse-mode tape. Every op evaluates immediately and appends one
// node; inputs always precede their consumers, so the node vector is already
// a topological order and backward() is a single reverse sweep.
//
// A tape is single-threaded and is meant to live for one forward/backward
// pass (one minibatch).
class Tape {
 public:
  Var constant(Tensor value);
  Var variable(Tensor value);

  const Tensor& value(Var v) const;
  // Gradient of the last backward() loss w.r.t. v. Zero-filled for variables
  // the loss does not reach.
  const Tensor& grad(Var v) const;
  bool requires_grad(Var v) const;
  std::size_t size() const { return nodes_.size(); }
  OpKind kind(Var v) const;

  // Reverse sweep from a 1x1 loss. May be called repeatedly with different
  // losses on the same tape; each call resets all gradients first.
  void backward(Var loss);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var add_row(Var m, Var row);
  Var add_col(Var m, Var col);
  Var scale(Var x, double c);
  Var add_scalar(Var x, double c);
  Var relu(Var x);
  Var elu(Var x);
  Var tanh(Var x);
  Var square(Var x);
  Var sqrt(Var x);
  Var exp(Var x);
  Var sum(Var x);
  Var mean(Var x);
  Var concat_cols(Var a, Var b);
  Var gather_rows(Var x, std::vector<std::size_t> rows);
  Var pairwise_sqdist(Var p, Var q);
  // Log-domain Sinkhorn half-steps; see kernels::softmin_rows/cols.
  // Outputs are column vectors.
  Var softmin_rows(Var cost, Var col_potential, double eps);
  Var softmin_cols(Var cost, Var row_potential, double eps);
  // P_ij = exp((f_i + g_j - C_ij) / eps) with f, g column vectors.
  Var entropic_plan(Var cost, Var f, Var g, double eps);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    OpKind kind = OpKind::kLeaf;
    std::array<std::size_t, 3> in{Var::kInvalid, Var::kInvalid, Var::kInvalid};
    double param = 0.0;
    std::vector<std::size_t> index;
    bool needs_grad = false;
  };

  const Node& node(Var v, std::string_view op) const;
  Var push(Node n);
  std::size_t next_id() const { return nodes_.size(); }
  void backprop_node(std::size_t id);
  Tensor& grad_of(std::size_t id) { return nodes_[id].grad; }
  bool wants(std::size_t id) const {
    return id != Var::kInvalid && nodes_[id].needs_grad;
  }

  // deque: references returned by value() stay valid as the tape grows.
  std::deque<Node> nodes_;
  bool has_backward_ = false;
};

}  // namespace iae
