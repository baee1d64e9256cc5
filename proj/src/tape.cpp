#include "iae/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "iae/error.hpp"
#include "iae/kernels.hpp"

namespace iae {

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kAddRow: return "add_row";
    case OpKind::kAddCol: return "add_col";
    case OpKind::kScale: return "scale";
    case OpKind::kAddScalar: return "add_scalar";
    case OpKind::kRelu: return "relu";
    case OpKind::kElu: return "elu";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSquare: return "square";
    case OpKind::kSqrt: return "sqrt";
    case OpKind::kExp: return "exp";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kConcatCols: return "concat_cols";
    case OpKind::kGatherRows: return "gather_rows";
    case OpKind::kPairwiseSqdist: return "pairwise_sqdist";
    case OpKind::kSoftminRows: return "softmin_rows";
    case OpKind::kSoftminCols: return "softmin_cols";
    case OpKind::kEntropicPlan: return "entropic_plan";
  }
  return "?";
}

const Tape::Node& Tape::node(Var v, std::string_view op) const {
  if (v.id >= nodes_.size()) {
    throw ShapeError(next_id(), std::string(op), "input is not a node of this tape");
  }
  return nodes_[v.id];
}

Var Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::variable(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = true;
  return push(std::move(n));
}

const Tensor& Tape::value(Var v) const { return node(v, "value").value; }

const Tensor& Tape::grad(Var v) const {
  const Node& n = node(v, "grad");
  if (!has_backward_) throw InputError("grad() requested before backward()");
  return n.grad;
}

bool Tape::requires_grad(Var v) const { return node(v, "requires_grad").needs_grad; }

OpKind Tape::kind(Var v) const { return node(v, "kind").kind; }

namespace {

void require(bool ok, std::size_t id, OpKind kind, const std::string& what) {
  if (!ok) throw ShapeError(id, std::string(op_name(kind)), what);
}

bool is_matrix(const Tensor& t) { return t.rank() == 2; }

}  // namespace

// ---- forward ops ----------------------------------------------------------

Var Tape::matmul(Var a, Var b) {
  const Node& na = node(a, "matmul");
  const Node& nb = node(b, "matmul");
  require(is_matrix(na.value) && is_matrix(nb.value) && na.value.cols() == nb.value.rows(),
          next_id(), OpKind::kMatMul,
          na.value.shape_string() + " * " + nb.value.shape_string());
  Node n;
  n.kind = OpKind::kMatMul;
  n.in = {a.id, b.id, Var::kInvalid};
  n.needs_grad = na.needs_grad || nb.needs_grad;
  kernels::matmul(na.value, nb.value, n.value);
  return push(std::move(n));
}

namespace {

template <typename F>
Tensor zip(const Tensor& a, const Tensor& b, F f) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

template <typename F>
Tensor map(const Tensor& a, F f) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

}  // namespace

Var Tape::add(Var a, Var b) {
  const Node& na = node(a, "add");
  const Node& nb = node(b, "add");
  require(na.value.same_shape(nb.value), next_id(), OpKind::kAdd,
          na.value.shape_string() + " + " + nb.value.shape_string());
  Node n;
  n.kind = OpKind::kAdd;
  n.in = {a.id, b.id, Var::kInvalid};
  n.needs_grad = na.needs_grad || nb.needs_grad;
  n.value = zip(na.value, nb.value, [](double x, double y) { return x + y; });
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  const Node& na = node(a, "sub");
  const Node& nb = node(b, "sub");
  require(na.value.same_shape(nb.value), next_id(), OpKind::kSub,
          na.value.shape_string() + " - " + nb.value.shape_string());
  Node n;
  n.kind = OpKind::kSub;
  n.in = {a.id, b.id, Var::kInvalid};
  n.needs_grad = na.needs_grad || nb.needs_grad;
  n.value = zip(na.value, nb.value, [](double x, double y) { return x - y; });
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  const Node& na = node(a, "mul");
  const Node& nb = node(b, "mul");
  require(na.value.same_shape(nb.value), next_id(), OpKind::kMul,
          na.value.shape_string() + " .* " + nb.value.shape_string());
  Node n;
  n.kind = OpKind::kMul;
  n.in = {a.id, b.id, Var::kInvalid};
  n.needs_grad = na.needs_grad || nb.needs_grad;
  n.value = zip(na.value, nb.value, [](double x, double y) { return x * y; });
  return push(std::move(n));
}

Var Tape::add_row(Var m, Var row) {
  const Node& nm = node(m, "add_row");
  const Node& nr = node(row, "add_row");
  require(is_matrix(nm.value) && is_matrix(nr.value) && nr.value.rows() == 1 &&
              nr.value.cols() == nm.value.cols(),
          next_id(), OpKind::kAddRow,
          nm.value.shape_string() + " + row " + nr.value.shape_string());
  Node n;
  n.kind = OpKind::kAddRow;
  n.in = {m.id, row.id, Var::kInvalid};
  n.needs_grad = nm.needs_grad || nr.needs_grad;
  n.value = nm.value;
  const std::size_t cols = nm.value.cols();
  for (std::size_t r = 0; r < nm.value.rows(); ++r)
    for (std::size_t c = 0; c < cols; ++c) n.value(r, c) += nr.value[c];
  return push(std::move(n));
}

Var Tape::add_col(Var m, Var col) {
  const Node& nm = node(m, "add_col");
  const Node& nc = node(col, "add_col");
  require(is_matrix(nm.value) && is_matrix(nc.value) && nc.value.cols() == 1 &&
              nc.value.rows() == nm.value.rows(),
          next_id(), OpKind::kAddCol,
          nm.value.shape_string() + " + col " + nc.value.shape_string());
  Node n;
  n.kind = OpKind::kAddCol;
  n.in = {m.id, col.id, Var::kInvalid};
  n.needs_grad = nm.needs_grad || nc.needs_grad;
  n.value = nm.value;
  const std::size_t cols = nm.value.cols();
  for (std::size_t r = 0; r < nm.value.rows(); ++r)
    for (std::size_t c = 0; c < cols; ++c) n.value(r, c) += nc.value[r];
  return push(std::move(n));
}

Var Tape::scale(Var x, double c) {
  const Node& nx = node(x, "scale");
  Node n;
  n.kind = OpKind::kScale;
  n.in = {x.id, Var::kInvalid, Var::kInvalid};
  n.param = c;
  n.needs_grad = nx.needs_grad;
  n.value = map(nx.value, [c](double v) { return v * c; });
  return push(std::move(n));
}

Var Tape::add_scalar(Var x, double c) {
  const Node& nx = node(x, "add_scalar");
  Node n;
  n.kind = OpKind::kAddScalar;
  n.in = {x.id, Var::kInvalid, Var::kInvalid};
  n.param = c;
  n.needs_grad = nx.needs_grad;
  n.value = map(nx.value, [c](double v) { return v + c; });
  return push(std::move(n));
}

namespace {

double elu(double v) { return v > 0.0 ? v : std::expm1(v); }

}  // namespace

#define IAE_UNARY_OP(method, KIND, expr)              \
  Var Tape::method(Var x) {                           \
    const Node& nx = node(x, #method);                \
    Node n;                                           \
    n.kind = OpKind::KIND;                            \
    n.in = {x.id, Var::kInvalid, Var::kInvalid};      \
    n.needs_grad = nx.needs_grad;                     \
    n.value = map(nx.value, [](double v) { return expr; }); \
    return push(std::move(n));                        \
  }

IAE_UNARY_OP(relu, kRelu, v > 0.0 ? v : 0.0)
IAE_UNARY_OP(elu, kElu, iae::elu(v))
IAE_UNARY_OP(tanh, kTanh, std::tanh(v))
IAE_UNARY_OP(square, kSquare, v * v)
IAE_UNARY_OP(sqrt, kSqrt, std::sqrt(v))
IAE_UNARY_OP(exp, kExp, std::exp(v))

#undef IAE_UNARY_OP

Var Tape::sum(Var x) {
  const Node& nx = node(x, "sum");
  Node n;
  n.kind = OpKind::kSum;
  n.in = {x.id, Var::kInvalid, Var::kInvalid};
  n.needs_grad = nx.needs_grad;
  double s = 0.0;
  for (double v : nx.value.values()) s += v;
  n.value = Tensor::scalar(s);
  return push(std::move(n));
}

Var Tape::mean(Var x) {
  const Node& nx = node(x, "mean");
  require(nx.value.size() > 0, next_id(), OpKind::kMean, "mean of empty tensor");
  Node n;
  n.kind = OpKind::kMean;
  n.in = {x.id, Var::kInvalid, Var::kInvalid};
  n.needs_grad = nx.needs_grad;
  double s = 0.0;
  for (double v : nx.value.values()) s += v;
  n.value = Tensor::scalar(s / static_cast<double>(nx.value.size()));
  return push(std::move(n));
}

Var Tape::concat_cols(Var a, Var b) {
  const Node& na = node(a, "concat_cols");
  const Node& nb = node(b, "concat_cols");
  require(is_matrix(na.value) && is_matrix(nb.value) && na.value.rows() == nb.value.rows(),
          next_id(), OpKind::kConcatCols,
          na.value.shape_string() + " | " + nb.value.shape_string());
  const std::size_t rows = na.value.rows();
  const std::size_t ca = na.value.cols();
  const std::size_t cb = nb.value.cols();
  Node n;
  n.kind = OpKind::kConcatCols;
  n.in = {a.id, b.id, Var::kInvalid};
  n.needs_grad = na.needs_grad || nb.needs_grad;
  n.value = Tensor::matrix(rows, ca + cb);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < ca; ++c) n.value(r, c) = na.value(r, c);
    for (std::size_t c = 0; c < cb; ++c) n.value(r, ca + c) = nb.value(r, c);
  }
  return push(std::move(n));
}

Var Tape::gather_rows(Var x, std::vector<std::size_t> rows) {
  const Node& nx = node(x, "gather_rows");
  require(is_matrix(nx.value), next_id(), OpKind::kGatherRows, "needs a matrix");
  const std::size_t cols = nx.value.cols();
  for (std::size_t r : rows) {
    require(r < nx.value.rows(), next_id(), OpKind::kGatherRows,
            "row " + std::to_string(r) + " out of range for " + nx.value.shape_string());
  }
  Node n;
  n.kind = OpKind::kGatherRows;
  n.in = {x.id, Var::kInvalid, Var::kInvalid};
  n.needs_grad = nx.needs_grad;
  n.value = Tensor::matrix(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy_n(nx.value.data() + rows[r] * cols, cols, n.value.data() + r * cols);
  }
  n.index = std::move(rows);
  return push(std::move(n));
}

Var Tape::pairwise_sqdist(Var p, Var q) {
  const Node& np = node(p, "pairwise_sqdist");
  const Node& nq = node(q, "pairwise_sqdist");
  require(is_matrix(np.value) && is_matrix(nq.value) && np.value.cols() == nq.value.cols(),
          next_id(), OpKind::kPairwiseSqdist,
          np.value.shape_string() + " vs " + nq.value.shape_string());
  Node n;
  n.kind = OpKind::kPairwiseSqdist;
  n.in = {p.id, q.id, Var::kInvalid};
  n.needs_grad = np.needs_grad || nq.needs_grad;
  kernels::pairwise_sqdist(np.value, nq.value, n.value);
  return push(std::move(n));
}

Var Tape::softmin_rows(Var cost, Var col_potential, double eps) {
  const Node& nc = node(cost, "softmin_rows");
  const Node& np = node(col_potential, "softmin_rows");
  require(is_matrix(nc.value) && np.value.size() == nc.value.cols() && eps > 0.0,
          next_id(), OpKind::kSoftminRows,
          "cost " + nc.value.shape_string() + ", potential " + np.value.shape_string());
  Node n;
  n.kind = OpKind::kSoftminRows;
  n.in = {cost.id, col_potential.id, Var::kInvalid};
  n.param = eps;
  n.needs_grad = nc.needs_grad || np.needs_grad;
  n.value = Tensor::matrix(nc.value.rows(), 1);
  kernels::softmin_rows(nc.value, np.value.values(), eps, n.value.values());
  return push(std::move(n));
}

Var Tape::softmin_cols(Var cost, Var row_potential, double eps) {
  const Node& nc = node(cost, "softmin_cols");
  const Node& np = node(row_potential, "softmin_cols");
  require(is_matrix(nc.value) && np.value.size() == nc.value.rows() && eps > 0.0,
          next_id(), OpKind::kSoftminCols,
          "cost " + nc.value.shape_string() + ", potential " + np.value.shape_string());
  Node n;
  n.kind = OpKind::kSoftminCols;
  n.in = {cost.id, row_potential.id, Var::kInvalid};
  n.param = eps;
  n.needs_grad = nc.needs_grad || np.needs_grad;
  n.value = Tensor::matrix(nc.value.cols(), 1);
  kernels::softmin_cols(nc.value, np.value.values(), eps, n.value.values());
  return push(std::move(n));
}

Var Tape::entropic_plan(Var cost, Var f, Var g, double eps) {
  const Node& nc = node(cost, "entropic_plan");
  const Node& nf = node(f, "entropic_plan");
  const Node& ng = node(g, "entropic_plan");
  require(is_matrix(nc.value) && nf.value.size() == nc.value.rows() &&
              ng.value.size() == nc.value.cols() && eps > 0.0,
          next_id(), OpKind::kEntropicPlan,
          "cost " + nc.value.shape_string() + ", f " + nf.value.shape_string() + ", g " +
              ng.value.shape_string());
  Node n;
  n.kind = OpKind::kEntropicPlan;
  n.in = {cost.id, f.id, g.id};
  n.param = eps;
  n.needs_grad = nc.needs_grad || nf.needs_grad || ng.needs_grad;
  const std::size_t rows = nc.value.rows();
  const std::size_t cols = nc.value.cols();
  n.value = Tensor::matrix(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      n.value(i, j) = std::exp((nf.value[i] + ng.value[j] - nc.value(i, j)) / eps);
  return push(std::move(n));
}

// ---- reverse sweep --------------------------------------------------------

void Tape::backward(Var loss) {
  if (!loss.valid() || loss.id >= nodes_.size()) {
    throw InputError("backward called before forward: loss is not a node of this tape");
  }
  if (nodes_[loss.id].value.size() != 1) {
    throw InputError("backward needs a scalar loss, got " +
                     nodes_[loss.id].value.shape_string());
  }
  for (Node& n : nodes_) {
    if (n.needs_grad) {
      if (n.grad.same_shape(n.value)) {
        n.grad.fill(0.0);
      } else {
        n.grad = Tensor(n.value.shape());
      }
    } else {
      n.grad = Tensor();
    }
  }
  has_backward_ = true;
  if (!nodes_[loss.id].needs_grad) return;
  nodes_[loss.id].grad[0] = 1.0;
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    if (nodes_[id].needs_grad && nodes_[id].kind != OpKind::kLeaf) backprop_node(id);
  }
}

void Tape::backprop_node(std::size_t id) {
  Node& n = nodes_[id];
  const Tensor& g = n.grad;
  const auto a = n.in[0];
  const auto b = n.in[1];
  const auto c = n.in[2];

  switch (n.kind) {
    case OpKind::kLeaf:
      return;
    case OpKind::kMatMul: {
      Tensor tmp;
      if (wants(a)) {
        kernels::matmul_nt(g, nodes_[b].value, tmp);
        Tensor& ga = grad_of(a);
        for (std::size_t i = 0; i < tmp.size(); ++i) ga[i] += tmp[i];
      }
      if (wants(b)) {
        kernels::matmul_tn(nodes_[a].value, g, tmp);
        Tensor& gb = grad_of(b);
        for (std::size_t i = 0; i < tmp.size(); ++i) gb[i] += tmp[i];
      }
      return;
    }
    case OpKind::kAdd:
    case OpKind::kSub: {
      const double sign = n.kind == OpKind::kAdd ? 1.0 : -1.0;
      if (wants(a)) {
        Tensor& ga = grad_of(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (wants(b)) {
        Tensor& gb = grad_of(b);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += sign * g[i];
      }
      return;
    }
    case OpKind::kMul: {
      if (wants(a)) {
        Tensor& ga = grad_of(a);
        const Tensor& vb = nodes_[b].value;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
      }
      if (wants(b)) {
        Tensor& gb = grad_of(b);
        const Tensor& va = nodes_[a].value;
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
      }
      return;
    }
    case OpKind::kAddRow: {
      const std::size_t rows = g.rows();
      const std::size_t cols = g.cols();
      if (wants(a)) {
        Tensor& ga = grad_of(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (wants(b)) {
        Tensor& gb = grad_of(b);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t k = 0; k < cols; ++k) gb[k] += g(r, k);
      }
      return;
    }
    case OpKind::kAddCol: {
      const std::size_t rows = g.rows();
      const std::size_t cols = g.cols();
      if (wants(a)) {
        Tensor& ga = grad_of(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (wants(b)) {
        Tensor& gb = grad_of(b);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t k = 0; k < cols; ++k) gb[r] += g(r, k);
      }
      return;
    }
    case OpKind::kScale: {
      Tensor& ga = grad_of(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += n.param * g[i];
      return;
    }
    case OpKind::kAddScalar: {
      Tensor& ga = grad_of(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      return;
    }
    case OpKind::kRelu: {
      Tensor& ga = grad_of(a);
      const Tensor& x = nodes_[a].value;
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += x[i] > 0.0 ? g[i] : 0.0;
      return;
    }
    case OpKind::kElu: {
      Tensor& ga = grad_of(a);
      const Tensor& x = nodes_[a].value;
      for (std::size_t i = 0; i < g.size(); ++i)
        ga[i] += x[i] > 0.0 ? g[i] : g[i] * std::exp(x[i]);
      return;
    }
    case OpKind::kTanh: {
      Tensor& ga = grad_of(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - n.value[i] * n.value[i]);
      return;
    }
    case OpKind::kSquare: {
      Tensor& ga = grad_of(a);
      const Tensor& x = nodes_[a].value;
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += 2.0 * x[i] * g[i];
      return;
    }
    case OpKind::kSqrt: {
      Tensor& ga = grad_of(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += 0.5 * g[i] / n.value[i];
      return;
    }
    case OpKind::kExp: {
      Tensor& ga = grad_of(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.value[i];
      return;
    }
    case OpKind::kSum:
    case OpKind::kMean: {
      Tensor& ga = grad_of(a);
      const double scale =
          n.kind == OpKind::kSum ? g[0] : g[0] / static_cast<double>(ga.size());
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += scale;
      return;
    }
    case OpKind::kConcatCols: {
      const std::size_t rows = g.rows();
      const std::size_t ca = nodes_[a].value.cols();
      const std::size_t cb = nodes_[b].value.cols();
      if (wants(a)) {
        Tensor& ga = grad_of(a);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t k = 0; k < ca; ++k) ga(r, k) += g(r, k);
      }
      if (wants(b)) {
        Tensor& gb = grad_of(b);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t k = 0; k < cb; ++k) gb(r, k) += g(r, ca + k);
      }
      return;
    }
    case OpKind::kGatherRows: {
      Tensor& ga = grad_of(a);
      const std::size_t cols = g.cols();
      for (std::size_t r = 0; r < n.index.size(); ++r) {
        double* dst = ga.data() + n.index[r] * cols;
        const double* src = g.data() + r * cols;
        for (std::size_t k = 0; k < cols; ++k) dst[k] += src[k];
      }
      return;
    }
    case OpKind::kPairwiseSqdist: {
      const Tensor& p = nodes_[a].value;
      const Tensor& q = nodes_[b].value;
      const std::size_t d = p.cols();
      for (std::size_t i = 0; i < p.rows(); ++i) {
        for (std::size_t j = 0; j < q.rows(); ++j) {
          const double gij = 2.0 * g(i, j);
          if (gij == 0.0) continue;
          for (std::size_t k = 0; k < d; ++k) {
            const double diff = p(i, k) - q(j, k);
            if (wants(a)) grad_of(a)(i, k) += gij * diff;
            if (wants(b)) grad_of(b)(j, k) -= gij * diff;
          }
        }
      }
      return;
    }
    case OpKind::kSoftminRows: {
      // out_i = -eps LSE_j((pot_j - C_ij)/eps): d out_i / d C_ij = pi_ij and
      // d out_i / d pot_j = -pi_ij, with pi_ij summing to 1 over j.
      const Tensor& cost = nodes_[a].value;
      const Tensor& pot = nodes_[b].value;
      const double eps = n.param;
      for (std::size_t i = 0; i < cost.rows(); ++i) {
        if (g[i] == 0.0) continue;
        for (std::size_t j = 0; j < cost.cols(); ++j) {
          const double w = g[i] * std::exp((pot[j] - cost(i, j) + n.value[i]) / eps);
          if (wants(a)) grad_of(a)(i, j) += w;
          if (wants(b)) grad_of(b)[j] -= w;
        }
      }
      return;
    }
    case OpKind::kSoftminCols: {
      const Tensor& cost = nodes_[a].value;
      const Tensor& pot = nodes_[b].value;
      const double eps = n.param;
      for (std::size_t i = 0; i < cost.rows(); ++i) {
        for (std::size_t j = 0; j < cost.cols(); ++j) {
          if (g[j] == 0.0) continue;
          const double w = g[j] * std::exp((pot[i] - cost(i, j) + n.value[j]) / eps);
          if (wants(a)) grad_of(a)(i, j) += w;
          if (wants(b)) grad_of(b)[i] -= w;
        }
      }
      return;
    }
    case OpKind::kEntropicPlan: {
      const Tensor& cost = nodes_[a].value;
      const double inv_eps = 1.0 / n.param;
      for (std::size_t i = 0; i < cost.rows(); ++i) {
        for (std::size_t j = 0; j < cost.cols(); ++j) {
          const double w = g(i, j) * n.value(i, j) * inv_eps;
          if (wants(a)) grad_of(a)(i, j) -= w;
          if (wants(b)) grad_of(b)[i] += w;
          if (wants(c)) grad_of(c)[j] += w;
        }
      }
      return;
    }
  }
}

}  // namespace iae
