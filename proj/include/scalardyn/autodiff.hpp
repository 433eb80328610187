#pragma once

// Reverse-mode differentiation over a dynamically recorded tape of dense
// matrix operations. Backward sweeps can themselves be recorded
// (Tape::gradient_graph), which is what second derivatives go through.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace scalardyn::ad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class UnaryKind : std::uint8_t { Tanh, Swish, SqrtAbs, Abs, Sqrt };

/// Highest derivative order of a UnaryKind that can be evaluated.
inline constexpr int kMaxUnaryOrder = 2;

/// Derivative magnitudes of sqrt|x| are evaluated at max(|x|, this).
inline constexpr double kSqrtAbsFloor = 1e-12;

/// Number of times a derivative of |x| (or sqrt|x|) was requested at exactly
/// x = 0, where 0 is used as the subgradient. Process-wide.
std::uint64_t kink_count();
void reset_kink_count();

/// Elementwise k-th derivative of `kind` (k = 0 is the function itself).
Matrix unary_value(UnaryKind kind, int order, const Matrix& x);

class Tape;

class Var {
 public:
  Var() = default;

  Tape* tape() const { return tape_; }
  int index() const { return index_; }
  bool valid() const { return tape_ != nullptr; }

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }

 private:
  friend class Tape;
  Var(Tape* tape, int index) : tape_(tape), index_(index) {}

  Tape* tape_ = nullptr;
  int index_ = -1;
};

enum class Op : std::uint8_t {
  Leaf,
  Constant,
  MatMul,        // op(a) * op(b); i0/i1 = transpose flags
  LeftMultiply,  // K * x or K^T * x with K a shared constant; i0 = transpose
  Add,
  Sub,
  Neg,
  Scale,         // alpha * x
  CwiseMul,
  AddBias,       // x + b * 1^T, b a column
  RowSum,        // x * 1 (column of row sums)
  BroadcastCols, // column repeated i0 times
  SumAll,        // 1x1
  BroadcastAll,  // 1x1 repeated to i0 x i1
  RowBlock,      // rows [i0, i0 + i1)
  PadRows,       // placed at row i0 of an i1-row zero matrix
  VStack,
  Unary,         // i0 = UnaryKind, i1 = derivative order
};

/// An append-only recording. Vars refer into it by index, so a Tape must
/// outlive its Vars and must not be moved while they are in use. Not
/// thread-safe; use one tape per thread.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Matrix value);
  Var constant(Matrix value);

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  const Matrix& value(int index) const { return nodes_[index].value; }

  /// Adjoints of `output` with respect to each of `wrt`, seeded with `seed`
  /// (all ones when omitted, i.e. the gradient of the sum of entries).
  /// Vars in `wrt` that `output` does not depend on get zero matrices.
  std::vector<Matrix> gradient(Var output, std::span<const Var> wrt,
                               const Matrix* seed = nullptr);

  /// As gradient(), but the sweep is recorded on this tape so the returned
  /// adjoints are themselves differentiable.
  std::vector<Var> gradient_graph(Var output, std::span<const Var> wrt,
                                  const Var* seed = nullptr);

  // Node constructors used by the free-function operators.
  Var record(Op op, Matrix value, int a = -1, int b = -1, int i0 = 0, int i1 = 0,
             double alpha = 0.0, std::shared_ptr<const Matrix> constant = nullptr);

 private:
  struct Node {
    Op op = Op::Leaf;
    Matrix value;
    int parent[2] = {-1, -1};
    int i0 = 0;
    int i1 = 0;
    double alpha = 0.0;
    std::shared_ptr<const Matrix> constant;
  };

  std::vector<char> relevant_nodes(int output, std::span<const Var> wrt) const;
  template <typename Backend>
  void sweep(int output, const std::vector<char>& relevant, Backend& backend);

  std::vector<Node> nodes_;
};

// Operators. Both operands must live on the same tape (std::invalid_argument
// otherwise).
Var matmul(Var a, Var b, bool transpose_a = false, bool transpose_b = false);
Var left_multiply(std::shared_ptr<const Matrix> k, Var x, bool transpose = false);
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator-(Var a);
Var operator*(double alpha, Var x);
Var cwise_mul(Var a, Var b);
Var add_bias(Var x, Var bias);
Var row_sum(Var x);
Var broadcast_cols(Var column, int cols);
Var sum(Var x);
Var broadcast_all(Var scalar, int rows, int cols);
Var row_block(Var x, int start, int count);
Var pad_rows(Var x, int start, int total_rows);
Var vstack(Var top, Var bottom);
Var unary(UnaryKind kind, Var x, int order = 0);

inline Var tanh(Var x) { return unary(UnaryKind::Tanh, x); }
inline Var swish(Var x) { return unary(UnaryKind::Swish, x); }
inline Var sqrt_abs(Var x) { return unary(UnaryKind::SqrtAbs, x); }
inline Var abs(Var x) { return unary(UnaryKind::Abs, x); }
inline Var sqrt(Var x) { return unary(UnaryKind::Sqrt, x); }

/// Inner product of two equally shaped Vars as a 1x1 Var.
inline Var dot(Var a, Var b) { return sum(cwise_mul(a, b)); }

using ScalarFunction = std::function<Var(Tape&, Var)>;

struct GradientResult {
  Vector gradient;
  double value = 0.0;
};

/// Value and gradient of a scalar function of a column vector.
GradientResult gradient(const ScalarFunction& f, const Vector& x);

/// grad_x (grad_x f . u): a Hessian-vector product via a recorded reverse
/// sweep followed by a second sweep.
Vector gradient_of_gradient_contraction(const ScalarFunction& f, const Vector& x,
                                        const Vector& u);

}  // namespace scalardyn::ad
