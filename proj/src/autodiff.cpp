#include "scalardyn/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>

namespace scalardyn::ad {

namespace {

std::atomic<std::uint64_t> g_kinks{0};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

double unary_scalar(UnaryKind kind, int order, double x, std::uint64_t& kinks) {
  switch (kind) {
    case UnaryKind::Tanh: {
      const double t = std::tanh(x);
      if (order == 0) return t;
      if (order == 1) return 1.0 - t * t;
      return -2.0 * t * (1.0 - t * t);
    }
    case UnaryKind::Swish: {
      const double s = sigmoid(x);
      if (order == 0) return x * s;
      if (order == 1) return s * (1.0 + x * (1.0 - s));
      return s * (1.0 - s) * (2.0 + x * (1.0 - 2.0 * s));
    }
    case UnaryKind::SqrtAbs: {
      const double a = std::abs(x);
      if (order == 0) return std::sqrt(a);
      if (x == 0.0) {
        ++kinks;
        return 0.0;
      }
      const double clamped = std::max(a, kSqrtAbsFloor);
      if (order == 1) return sign(x) * 0.5 / std::sqrt(clamped);
      return -0.25 / (clamped * std::sqrt(clamped));
    }
    case UnaryKind::Abs: {
      if (order == 0) return std::abs(x);
      if (x == 0.0) {
        ++kinks;
        return 0.0;
      }
      return order == 1 ? sign(x) : 0.0;
    }
    case UnaryKind::Sqrt: {
      if (order == 0) return std::sqrt(x);
      const double clamped = std::max(x, kSqrtAbsFloor);
      if (order == 1) return 0.5 / std::sqrt(clamped);
      return -0.25 / (clamped * std::sqrt(clamped));
    }
  }
  return 0.0;
}

Tape& common_tape(const Var& a, const Var& b) {
  if (!a.valid() || !b.valid()) throw std::invalid_argument("ad: uninitialized Var");
  if (a.tape() != b.tape()) throw std::invalid_argument("ad: Vars from different tapes");
  return *a.tape();
}

Tape& tape_of(const Var& a) {
  if (!a.valid()) throw std::invalid_argument("ad: uninitialized Var");
  return *a.tape();
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string("ad: shape mismatch in ") + what + " (" +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ")");
  }
}

// Matrix-valued counterparts of the Var operators, so that backward rules can
// be written once for both sweep modes.
Matrix mm(const Matrix& a, const Matrix& b, bool ta, bool tb) {
  if (!ta && !tb) return a * b;
  if (ta && !tb) return a.transpose() * b;
  if (!ta && tb) return a * b.transpose();
  return a.transpose() * b.transpose();
}
Matrix lmul(const std::shared_ptr<const Matrix>& k, const Matrix& x, bool t) {
  return t ? Matrix(k->transpose() * x) : Matrix(*k * x);
}
Matrix neg(const Matrix& a) { return -a; }
Matrix scale(double alpha, const Matrix& a) { return alpha * a; }
Matrix cmul(const Matrix& a, const Matrix& b) { return a.cwiseProduct(b); }
Matrix rsum(const Matrix& x) { return x.rowwise().sum(); }
Matrix bcols(const Matrix& x, int n) { return x.replicate(1, n); }
Matrix sall(const Matrix& x) { return Matrix::Constant(1, 1, x.sum()); }
Matrix ball(const Matrix& x, int r, int c) { return Matrix::Constant(r, c, x(0, 0)); }
Matrix rblock(const Matrix& x, int s, int n) { return x.middleRows(s, n); }
Matrix prows(const Matrix& x, int s, int total) {
  Matrix out = Matrix::Zero(total, x.cols());
  out.middleRows(s, x.rows()) = x;
  return out;
}
Matrix un(UnaryKind kind, int order, const Matrix& x) { return unary_value(kind, order, x); }

Var mm(Var a, Var b, bool ta, bool tb) { return matmul(a, b, ta, tb); }
Var lmul(const std::shared_ptr<const Matrix>& k, Var x, bool t) { return left_multiply(k, x, t); }
Var neg(Var a) { return -a; }
Var scale(double alpha, Var a) { return alpha * a; }
Var cmul(Var a, Var b) { return cwise_mul(a, b); }
Var rsum(Var x) { return row_sum(x); }
Var bcols(Var x, int n) { return broadcast_cols(x, n); }
Var sall(Var x) { return sum(x); }
Var ball(Var x, int r, int c) { return broadcast_all(x, r, c); }
Var rblock(Var x, int s, int n) { return row_block(x, s, n); }
Var prows(Var x, int s, int total) { return pad_rows(x, s, total); }
Var un(UnaryKind kind, int order, Var x) { return unary(kind, x, order); }

}  // namespace

std::uint64_t kink_count() { return g_kinks.load(std::memory_order_relaxed); }
void reset_kink_count() { g_kinks.store(0, std::memory_order_relaxed); }

Matrix unary_value(UnaryKind kind, int order, const Matrix& x) {
  if (order < 0 || order > kMaxUnaryOrder) {
    throw std::invalid_argument("ad: unsupported derivative order " + std::to_string(order));
  }
  Matrix out(x.rows(), x.cols());
  std::uint64_t kinks = 0;
  const Eigen::Index n = x.size();
  const double* in = x.data();
  double* o = out.data();
  for (Eigen::Index i = 0; i < n; ++i) o[i] = unary_scalar(kind, order, in[i], kinks);
  if (kinks != 0) g_kinks.fetch_add(kinks, std::memory_order_relaxed);
  return out;
}

const Matrix& Var::value() const {
  if (!valid()) throw std::invalid_argument("ad: uninitialized Var");
  return tape_->value(index_);
}

Var Tape::record(Op op, Matrix value, int a, int b, int i0, int i1, double alpha,
                 std::shared_ptr<const Matrix> constant) {
  Node n;
  n.op = op;
  n.value = std::move(value);
  n.parent[0] = a;
  n.parent[1] = b;
  n.i0 = i0;
  n.i1 = i1;
  n.alpha = alpha;
  n.constant = std::move(constant);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::leaf(Matrix value) { return record(Op::Leaf, std::move(value)); }
Var Tape::constant(Matrix value) { return record(Op::Constant, std::move(value)); }

std::vector<char> Tape::relevant_nodes(int output, std::span<const Var> wrt) const {
  int base = output + 1;
  for (const Var& w : wrt) base = std::min(base, w.index());
  std::vector<char> relevant(nodes_.size(), 0);
  for (const Var& w : wrt) relevant[w.index()] = 1;
  for (int i = base; i <= output; ++i) {
    if (relevant[i]) continue;
    const Node& n = nodes_[i];
    if ((n.parent[0] >= 0 && relevant[n.parent[0]]) ||
        (n.parent[1] >= 0 && relevant[n.parent[1]])) {
      relevant[i] = 1;
    }
  }
  return relevant;
}

namespace {

struct NumericBackend {
  using Adj = Matrix;
  Tape& tape;
  std::vector<Matrix> adj;
  std::vector<char> has;
  // Requested adjoints stay in place; everything else is released once used.
  std::vector<char> keep;

  const Matrix& parent(int j) const { return tape.value(j); }
  void accumulate(int j, Matrix g) {
    if (has[j]) {
      adj[j] += g;
    } else {
      adj[j] = std::move(g);
      has[j] = 1;
    }
  }
  Matrix take(int j) {
    if (keep[j]) return adj[j];
    has[j] = 0;
    return std::move(adj[j]);
  }
};

struct GraphBackend {
  using Adj = Var;
  Tape& tape;
  std::vector<Var> adj;
  std::vector<char> has;
  std::vector<Var> handles;

  Var parent(int j) const { return handles[j]; }
  void accumulate(int j, Var g) {
    if (has[j]) {
      adj[j] = adj[j] + g;
    } else {
      adj[j] = g;
      has[j] = 1;
    }
  }
  Var take(int j) { return adj[j]; }
};

}  // namespace

template <typename Backend>
void Tape::sweep(int output, const std::vector<char>& relevant, Backend& be) {
  for (int i = output; i >= 0; --i) {
    if (!relevant[i] || !be.has[i]) continue;
    // Copy the metadata: graph-mode rules append to nodes_.
    const Op op = nodes_[i].op;
    const int pa = nodes_[i].parent[0];
    const int pb = nodes_[i].parent[1];
    const int i0 = nodes_[i].i0;
    const int i1 = nodes_[i].i1;
    const double alpha = nodes_[i].alpha;
    const std::shared_ptr<const Matrix> k = nodes_[i].constant;
    const bool want_a = pa >= 0 && relevant[pa];
    const bool want_b = pb >= 0 && relevant[pb];
    if (!want_a && !want_b) continue;
    const typename Backend::Adj g = be.take(i);

    switch (op) {
      case Op::Leaf:
      case Op::Constant:
        break;
      case Op::MatMul: {
        const bool ta = i0 != 0;
        const bool tb = i1 != 0;
        if (want_a) {
          if (!ta && !tb) be.accumulate(pa, mm(g, be.parent(pb), false, true));
          if (ta && !tb) be.accumulate(pa, mm(be.parent(pb), g, false, true));
          if (!ta && tb) be.accumulate(pa, mm(g, be.parent(pb), false, false));
          if (ta && tb) be.accumulate(pa, mm(be.parent(pb), g, true, true));
        }
        if (want_b) {
          if (!ta && !tb) be.accumulate(pb, mm(be.parent(pa), g, true, false));
          if (ta && !tb) be.accumulate(pb, mm(be.parent(pa), g, false, false));
          if (!ta && tb) be.accumulate(pb, mm(g, be.parent(pa), true, false));
          if (ta && tb) be.accumulate(pb, mm(g, be.parent(pa), true, true));
        }
        break;
      }
      case Op::LeftMultiply:
        be.accumulate(pa, lmul(k, g, i0 == 0));
        break;
      case Op::Add:
        if (want_a) be.accumulate(pa, g);
        if (want_b) be.accumulate(pb, g);
        break;
      case Op::Sub:
        if (want_a) be.accumulate(pa, g);
        if (want_b) be.accumulate(pb, neg(g));
        break;
      case Op::Neg:
        be.accumulate(pa, neg(g));
        break;
      case Op::Scale:
        be.accumulate(pa, scale(alpha, g));
        break;
      case Op::CwiseMul:
        if (want_a) be.accumulate(pa, cmul(g, be.parent(pb)));
        if (want_b) be.accumulate(pb, cmul(g, be.parent(pa)));
        break;
      case Op::AddBias:
        if (want_a) be.accumulate(pa, g);
        if (want_b) be.accumulate(pb, rsum(g));
        break;
      case Op::RowSum:
        be.accumulate(pa, bcols(g, i0));
        break;
      case Op::BroadcastCols:
        be.accumulate(pa, rsum(g));
        break;
      case Op::SumAll:
        be.accumulate(pa, ball(g, i0, i1));
        break;
      case Op::BroadcastAll:
        be.accumulate(pa, sall(g));
        break;
      case Op::RowBlock:
        be.accumulate(pa, prows(g, i0, static_cast<int>(alpha)));
        break;
      case Op::PadRows:
        be.accumulate(pa, rblock(g, i0, static_cast<int>(alpha)));
        break;
      case Op::VStack: {
        if (want_a) be.accumulate(pa, rblock(g, 0, i0));
        if (want_b) be.accumulate(pb, rblock(g, i0, i1));
        break;
      }
      case Op::Unary:
        be.accumulate(pa, cmul(g, un(static_cast<UnaryKind>(i0), i1 + 1, be.parent(pa))));
        break;
    }
  }
}

std::vector<Matrix> Tape::gradient(Var output, std::span<const Var> wrt, const Matrix* seed) {
  for (const Var& w : wrt) common_tape(output, w);
  if (output.tape() != this) throw std::invalid_argument("ad: output from another tape");
  const int out = output.index();
  const Matrix& out_value = nodes_[out].value;

  std::vector<char> relevant = relevant_nodes(out, wrt);
  NumericBackend be{*this, std::vector<Matrix>(nodes_.size()),
                    std::vector<char>(nodes_.size(), 0), std::vector<char>(nodes_.size(), 0)};
  if (seed != nullptr) {
    require_same_shape(*seed, out_value, "gradient seed");
    be.accumulate(out, *seed);
  } else {
    be.accumulate(out, Matrix::Ones(out_value.rows(), out_value.cols()));
  }

  for (const Var& w : wrt) be.keep[w.index()] = 1;
  sweep(out, relevant, be);

  std::vector<Matrix> result;
  result.reserve(wrt.size());
  for (const Var& w : wrt) {
    const int j = w.index();
    if (be.has[j]) {
      result.push_back(be.adj[j]);
    } else {
      result.push_back(Matrix::Zero(nodes_[j].value.rows(), nodes_[j].value.cols()));
    }
  }
  return result;
}

std::vector<Var> Tape::gradient_graph(Var output, std::span<const Var> wrt, const Var* seed) {
  for (const Var& w : wrt) common_tape(output, w);
  if (output.tape() != this) throw std::invalid_argument("ad: output from another tape");
  const int out = output.index();
  const std::size_t n = nodes_.size();

  std::vector<char> relevant = relevant_nodes(out, wrt);
  GraphBackend be{*this, std::vector<Var>(n), std::vector<char>(n, 0), std::vector<Var>(n)};
  for (std::size_t j = 0; j < n; ++j) be.handles[j] = Var(this, static_cast<int>(j));

  if (seed != nullptr) {
    common_tape(output, *seed);
    require_same_shape(seed->value(), nodes_[out].value, "gradient seed");
    be.accumulate(out, *seed);
  } else {
    const Matrix& v = nodes_[out].value;
    be.accumulate(out, constant(Matrix::Ones(v.rows(), v.cols())));
  }
  sweep(out, relevant, be);

  std::vector<Var> result;
  result.reserve(wrt.size());
  for (const Var& w : wrt) {
    const int j = w.index();
    if (be.has[j]) {
      result.push_back(be.adj[j]);
    } else {
      const Matrix& v = nodes_[j].value;
      result.push_back(constant(Matrix::Zero(v.rows(), v.cols())));
    }
  }
  return result;
}

Var matmul(Var a, Var b, bool transpose_a, bool transpose_b) {
  Tape& t = common_tape(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  const Eigen::Index inner_a = transpose_a ? av.rows() : av.cols();
  const Eigen::Index inner_b = transpose_b ? bv.cols() : bv.rows();
  if (inner_a != inner_b) throw std::invalid_argument("ad: matmul inner dimension mismatch");
  return t.record(Op::MatMul, mm(av, bv, transpose_a, transpose_b), a.index(), b.index(),
                  transpose_a ? 1 : 0, transpose_b ? 1 : 0);
}

Var left_multiply(std::shared_ptr<const Matrix> k, Var x, bool transpose) {
  Tape& t = tape_of(x);
  if ((transpose ? k->rows() : k->cols()) != x.rows()) {
    throw std::invalid_argument("ad: left_multiply dimension mismatch");
  }
  Matrix v = lmul(k, x.value(), transpose);
  return t.record(Op::LeftMultiply, std::move(v), x.index(), -1, transpose ? 1 : 0, 0, 0.0,
                  std::move(k));
}

Var operator+(Var a, Var b) {
  Tape& t = common_tape(a, b);
  require_same_shape(a.value(), b.value(), "add");
  return t.record(Op::Add, a.value() + b.value(), a.index(), b.index());
}

Var operator-(Var a, Var b) {
  Tape& t = common_tape(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  return t.record(Op::Sub, a.value() - b.value(), a.index(), b.index());
}

Var operator-(Var a) { return tape_of(a).record(Op::Neg, -a.value(), a.index()); }

Var operator*(double alpha, Var x) {
  return tape_of(x).record(Op::Scale, alpha * x.value(), x.index(), -1, 0, 0, alpha);
}

Var cwise_mul(Var a, Var b) {
  Tape& t = common_tape(a, b);
  require_same_shape(a.value(), b.value(), "cwise_mul");
  return t.record(Op::CwiseMul, a.value().cwiseProduct(b.value()), a.index(), b.index());
}

Var add_bias(Var x, Var bias) {
  Tape& t = common_tape(x, bias);
  if (bias.cols() != 1 || bias.rows() != x.rows()) {
    throw std::invalid_argument("ad: add_bias expects a column matching x's rows");
  }
  Matrix v = x.value().colwise() + bias.value().col(0);
  return t.record(Op::AddBias, std::move(v), x.index(), bias.index());
}

Var row_sum(Var x) {
  return tape_of(x).record(Op::RowSum, rsum(x.value()), x.index(), -1,
                           static_cast<int>(x.cols()));
}

Var broadcast_cols(Var column, int cols) {
  if (column.cols() != 1) throw std::invalid_argument("ad: broadcast_cols expects a column");
  return tape_of(column).record(Op::BroadcastCols, bcols(column.value(), cols),
                                column.index());
}

Var sum(Var x) {
  return tape_of(x).record(Op::SumAll, sall(x.value()), x.index(), -1,
                           static_cast<int>(x.rows()), static_cast<int>(x.cols()));
}

Var broadcast_all(Var scalar, int rows, int cols) {
  if (scalar.rows() != 1 || scalar.cols() != 1) {
    throw std::invalid_argument("ad: broadcast_all expects a 1x1 Var");
  }
  return tape_of(scalar).record(Op::BroadcastAll, ball(scalar.value(), rows, cols),
                                scalar.index());
}

Var row_block(Var x, int start, int count) {
  if (start < 0 || count < 0 || start + count > x.rows()) {
    throw std::invalid_argument("ad: row_block out of range");
  }
  return tape_of(x).record(Op::RowBlock, rblock(x.value(), start, count), x.index(), -1, start,
                           count, static_cast<double>(x.rows()));
}

Var pad_rows(Var x, int start, int total_rows) {
  if (start < 0 || start + x.rows() > total_rows) {
    throw std::invalid_argument("ad: pad_rows out of range");
  }
  return tape_of(x).record(Op::PadRows, prows(x.value(), start, total_rows), x.index(), -1,
                           start, total_rows, static_cast<double>(x.rows()));
}

Var vstack(Var top, Var bottom) {
  Tape& t = common_tape(top, bottom);
  if (top.cols() != bottom.cols()) throw std::invalid_argument("ad: vstack column mismatch");
  Matrix v(top.rows() + bottom.rows(), top.cols());
  v << top.value(), bottom.value();
  return t.record(Op::VStack, std::move(v), top.index(), bottom.index(),
                  static_cast<int>(top.rows()), static_cast<int>(bottom.rows()));
}

Var unary(UnaryKind kind, Var x, int order) {
  return tape_of(x).record(Op::Unary, unary_value(kind, order, x.value()), x.index(), -1,
                           static_cast<int>(kind), order);
}

GradientResult gradient(const ScalarFunction& f, const Vector& x) {
  Tape tape;
  const Var input = tape.leaf(x);
  const Var out = f(tape, input);
  if (out.rows() != 1 || out.cols() != 1) {
    throw std::invalid_argument("ad::gradient: function must return a 1x1 value");
  }
  const Var wrt[] = {input};
  GradientResult r;
  r.value = out.value()(0, 0);
  r.gradient = tape.gradient(out, wrt)[0].col(0);
  return r;
}

Vector gradient_of_gradient_contraction(const ScalarFunction& f, const Vector& x,
                                        const Vector& u) {
  if (u.size() != x.size()) {
    throw std::invalid_argument("ad: contraction vector has wrong length");
  }
  Tape tape;
  const Var input = tape.leaf(x);
  const Var out = f(tape, input);
  if (out.rows() != 1 || out.cols() != 1) {
    throw std::invalid_argument("ad: function must return a 1x1 value");
  }
  const Var wrt[] = {input};
  const Var grad = tape.gradient_graph(out, wrt)[0];
  const Var contraction = dot(grad, tape.constant(u));
  return tape.gradient(contraction, wrt)[0].col(0);
}

}  // namespace scalardyn::ad
