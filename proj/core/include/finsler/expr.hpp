// Symbolic scalar fields on the tangent bundle: expression trees over the
// chart coordinates (x^1..x^n, y^1..y^n) with exact differentiation and
// numeric evaluation of arbitrary-order jets.
#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace finsler {

struct ExprError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed source text; `offset` is the byte position of the problem.
struct SyntaxError : ExprError {
  SyntaxError(const std::string& message, std::size_t offset);
  std::size_t offset;
};

/// A variable index outside 1..dim in the source text.
struct IndexError : ExprError {
  IndexError(const std::string& message, std::size_t offset);
  std::size_t offset;
};

/// Evaluation left the mathematical domain (sqrt of a negative, division by
/// zero, ...); carries the printed form of the offending subexpression.
struct DomainError : ExprError {
  DomainError(const std::string& message, std::string subexpression);
  std::string subexpression;
};

enum class VarKind : std::uint8_t { Base, Fiber };  // x^i / y^i

/// One chart coordinate. Indices are 0-based in the API; the textual grammar
/// uses the 1-based forms x[1]..x[n], y[1]..y[n].
struct Var {
  VarKind kind;
  int index;

  static Var x(int i) { return {VarKind::Base, i}; }
  static Var y(int i) { return {VarKind::Fiber, i}; }

  // Flat slot in [0, 2n): base coordinates first, fiber coordinates after.
  int slot(int dim) const { return kind == VarKind::Base ? index : dim + index; }
  static Var from_slot(int slot, int dim) {
    return slot < dim ? Var::x(slot) : Var::y(slot - dim);
  }

  friend bool operator==(const Var&, const Var&) = default;
  friend auto operator<=>(const Var&, const Var&) = default;
};

/// A point (x, y) of the slit tangent bundle: y != 0 is enforced at
/// construction, domain predicates are checked by the callers that own them.
class ChartPoint {
 public:
  ChartPoint(Eigen::VectorXd x, Eigen::VectorXd y);

  int dim() const { return static_cast<int>(x_.size()); }
  const Eigen::VectorXd& x() const { return x_; }
  const Eigen::VectorXd& y() const { return y_; }
  double coord(int slot) const {
    return slot < dim() ? x_[slot] : y_[slot - dim()];
  }
  double coord(Var v) const { return coord(v.slot(dim())); }

  /// Same base point, fiber scaled by t (t > 0 keeps it on the slit bundle).
  ChartPoint scaled_fiber(double t) const { return ChartPoint(x_, t * y_); }

 private:
  Eigen::VectorXd x_, y_;
};

namespace detail {
struct Node;
}
using NodePtr = std::shared_ptr<const detail::Node>;

/// Immutable expression over the 2n chart coordinates. Nodes are interned,
/// so structurally equal expressions share one tree and `identical` is O(1).
/// Arithmetic applies light simplification (constant folding, 0/1 pruning).
class Expr {
 public:
  Expr() = default;  // invalid until assigned

  static Expr constant(double value, int dim);
  static Expr variable(Var v, int dim);

  bool valid() const { return root_ != nullptr; }
  int dim() const { return dim_; }

  bool is_zero() const;
  bool is_constant() const;
  double constant_value() const;  // pre: is_constant()

  bool identical(const Expr& other) const;
  std::string str() const;

  Expr derivative(Var v) const;
  double operator()(const ChartPoint& p) const;

  Expr pow(int k) const;
  Expr squared() const { return pow(2); }

  friend Expr operator+(const Expr&, const Expr&);
  friend Expr operator-(const Expr&, const Expr&);
  friend Expr operator*(const Expr&, const Expr&);
  friend Expr operator/(const Expr&, const Expr&);
  friend Expr operator-(const Expr&);

  friend Expr operator*(double, const Expr&);
  friend Expr operator*(const Expr& e, double c) { return c * e; }
  friend Expr operator/(const Expr&, double);

 private:
  Expr(NodePtr root, int dim) : root_(std::move(root)), dim_(dim) {}

  NodePtr root_;
  int dim_ = 0;

  friend Expr detail_wrap(NodePtr, int);
  friend const NodePtr& detail_root(const Expr&);
};

Expr sqrt(const Expr&);
Expr exp(const Expr&);
Expr log(const Expr&);
Expr sin(const Expr&);
Expr cos(const Expr&);

/// Parse an expression over x[1..dim], y[1..dim]. Grammar:
///   expr   := term (("+"|"-") term)*
///   term   := factor (("*"|"/") factor)*
///   factor := atom ("^" integer)? | "-" factor
///   atom   := number | x[i] | y[i] | ident "(" ... ")" | "(" expr ")"
/// Builtins: sqrt, exp, log, sin, cos; dot(x,y), dot(x,x), dot(y,y) expand
/// to coordinate sums.
Expr parse(std::string_view source, int dim);

Expr differentiate(const Expr& e, Var v);
double eval(const Expr& e, const ChartPoint& p);

/// Evaluate a batch of expressions at one point with a shared memo table;
/// interned trees overlap heavily, so this is much cheaper than separate
/// eval calls.
std::vector<double> eval_many(std::span<const Expr> exprs,
                              const ChartPoint& p);

/// All mixed partials of an expression at a point, complete up to a given
/// order. Entries are stored under one canonical (sorted) multi-index, so
/// lookups are invariant under permutation by construction.
class JetValue {
 public:
  using MultiIndex = std::vector<int>;  // sorted coordinate slots

  JetValue(ChartPoint point, int order, std::map<MultiIndex, double> entries);

  const ChartPoint& point() const { return point_; }
  int order() const { return order_; }
  double value() const;  // order-0 entry
  double entry(std::span<const Var> vars) const;
  double entry(MultiIndex index) const;  // any permutation accepted
  const std::map<MultiIndex, double>& entries() const { return entries_; }

 private:
  ChartPoint point_;
  int order_;
  std::map<MultiIndex, double> entries_;
};

JetValue evaluate_jet(const Expr& e, const ChartPoint& p, int order);

/// Positive homogeneity in the fiber variable: checks both the scaling law
/// e(x, t y) = t^k e(x, y) and the Euler identity y^i (de/dy^i) = k e.
struct HomogeneityReport {
  int degree = 0;
  double max_scale_error = 0.0;
  double max_euler_error = 0.0;
  double tol = 0.0;
  bool passed = false;
};

HomogeneityReport check_homogeneity(const Expr& e, int degree,
                                    std::span<const ChartPoint> samples,
                                    std::span<const double> scales,
                                    double tol = 1e-6);

}  // namespace finsler
