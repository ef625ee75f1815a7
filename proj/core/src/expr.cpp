#include "finsler/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <climits>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <mutex>
#include <unordered_map>
#include <utility>

namespace finsler {

// ---------------------------------------------------------------------------
// Nodes and interning
// ---------------------------------------------------------------------------

namespace detail {

enum class Kind : std::uint8_t {
  Constant,
  VarX,
  VarY,
  Neg,
  Sqrt,
  Exp,
  Log,
  Sin,
  Cos,
  Add,
  Sub,
  Mul,
  Div,
  Pow,  // integer exponent in `index`
};

struct Node {
  Kind kind;
  double value = 0.0;  // Constant
  int index = 0;       // VarX/VarY: 0-based coordinate; Pow: exponent
  NodePtr a, b;
};

namespace {

struct NodeKey {
  Kind kind;
  std::uint64_t value_bits;
  int index;
  const Node* a;
  const Node* b;
  friend bool operator==(const NodeKey&, const NodeKey&) = default;
};

struct NodeKeyHash {
  std::size_t operator()(const NodeKey& k) const {
    std::size_t h = static_cast<std::size_t>(k.kind);
    auto mix = [&h](std::size_t v) {
      h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    };
    mix(static_cast<std::size_t>(k.value_bits));
    mix(static_cast<std::size_t>(k.index));
    mix(reinterpret_cast<std::size_t>(k.a));
    mix(reinterpret_cast<std::size_t>(k.b));
    return h;
  }
};

std::uint64_t bits_of(double v) {
  std::uint64_t b;
  static_assert(sizeof(b) == sizeof(v));
  std::memcpy(&b, &v, sizeof(b));
  return b;
}

// Interning table: structurally equal nodes share one allocation, so
// structural equality of whole trees is pointer equality and the derivative
// cache below gets hits across expressions. Entries remove themselves when
// the last reference drops.
class NodeTable {
 public:
  static NodeTable& instance() {
    static NodeTable table;
    return table;
  }

  NodePtr intern(Kind kind, double value, int index, NodePtr a, NodePtr b) {
    NodeKey key{kind, bits_of(value), index, a.get(), b.get()};
    std::lock_guard<std::recursive_mutex> lock(mu_);
    auto it = map_.find(key);
    if (it != map_.end()) {
      if (NodePtr live = it->second.lock()) return live;
    }
    auto deleter = [key](Node* n) {
      NodeTable& t = NodeTable::instance();
      std::lock_guard<std::recursive_mutex> lk(t.mu_);
      auto entry = t.map_.find(key);
      if (entry != t.map_.end() && entry->second.expired()) t.map_.erase(entry);
      delete n;
    };
    NodePtr node(new Node{kind, value, index, std::move(a), std::move(b)},
                 deleter);
    map_[key] = node;
    return node;
  }

 private:
  std::recursive_mutex mu_;
  std::unordered_map<NodeKey, std::weak_ptr<const Node>, NodeKeyHash> map_;
};

bool is_const(const NodePtr& n, double v) {
  return n->kind == Kind::Constant && n->value == v;
}

NodePtr make(Kind k, double value, int index, NodePtr a, NodePtr b) {
  return NodeTable::instance().intern(k, value, index, std::move(a),
                                      std::move(b));
}

NodePtr constant(double v) { return make(Kind::Constant, v, 0, nullptr, nullptr); }

NodePtr variable(VarKind kind, int index) {
  return make(kind == VarKind::Base ? Kind::VarX : Kind::VarY, 0.0, index,
              nullptr, nullptr);
}

NodePtr neg(NodePtr a) {
  if (a->kind == Kind::Constant) return constant(-a->value);
  if (a->kind == Kind::Neg) return a->a;
  return make(Kind::Neg, 0, 0, std::move(a), nullptr);
}

NodePtr add(NodePtr a, NodePtr b) {
  if (a->kind == Kind::Constant && b->kind == Kind::Constant)
    return constant(a->value + b->value);
  if (is_const(a, 0)) return b;
  if (is_const(b, 0)) return a;
  return make(Kind::Add, 0, 0, std::move(a), std::move(b));
}

NodePtr sub(NodePtr a, NodePtr b) {
  if (a->kind == Kind::Constant && b->kind == Kind::Constant)
    return constant(a->value - b->value);
  if (is_const(b, 0)) return a;
  if (is_const(a, 0)) return neg(std::move(b));
  if (a == b) return constant(0.0);
  return make(Kind::Sub, 0, 0, std::move(a), std::move(b));
}

NodePtr mul(NodePtr a, NodePtr b) {
  if (a->kind == Kind::Constant && b->kind == Kind::Constant)
    return constant(a->value * b->value);
  if (is_const(a, 0) || is_const(b, 0)) return constant(0.0);
  if (is_const(a, 1)) return b;
  if (is_const(b, 1)) return a;
  if (is_const(a, -1)) return neg(std::move(b));
  if (is_const(b, -1)) return neg(std::move(a));
  return make(Kind::Mul, 0, 0, std::move(a), std::move(b));
}

NodePtr pow_int(NodePtr a, int k);

NodePtr div(NodePtr a, NodePtr b) {
  if (is_const(b, 1)) return a;
  if (is_const(a, 0)) return a;
  if (a->kind == Kind::Constant && b->kind == Kind::Constant && b->value != 0)
    return constant(a->value / b->value);
  if (a == b) return constant(1.0);
  return make(Kind::Div, 0, 0, std::move(a), std::move(b));
}

NodePtr pow_int(NodePtr a, int k) {
  if (k == 0) return constant(1.0);
  if (k == 1) return a;
  if (a->kind == Kind::Constant) return constant(std::pow(a->value, k));
  // (sqrt u)^(2m) = u^m: keeps energies of square-root metrics rational.
  if (a->kind == Kind::Sqrt && k % 2 == 0) return pow_int(a->a, k / 2);
  if (a->kind == Kind::Pow) {
    long long combined = static_cast<long long>(a->index) * k;
    if (combined >= INT_MIN && combined <= INT_MAX)
      return pow_int(a->a, static_cast<int>(combined));
  }
  return make(Kind::Pow, 0, k, std::move(a), nullptr);
}

NodePtr call(Kind k, NodePtr a) {
  if (a->kind == Kind::Constant) {
    double v = a->value;
    switch (k) {
      case Kind::Sqrt:
        if (v >= 0) return constant(std::sqrt(v));
        break;
      case Kind::Exp:
        return constant(std::exp(v));
      case Kind::Log:
        if (v > 0) return constant(std::log(v));
        break;
      case Kind::Sin:
        return constant(std::sin(v));
      case Kind::Cos:
        return constant(std::cos(v));
      default:
        break;
    }
  }
  return make(k, 0, 0, std::move(a), nullptr);
}

// ---------------------------------------------------------------------------
// Printing (precedence-aware, used for messages and reports)
// ---------------------------------------------------------------------------

int precedence(Kind k) {
  switch (k) {
    case Kind::Add:
    case Kind::Sub:
      return 1;
    case Kind::Mul:
    case Kind::Div:
      return 2;
    case Kind::Neg:
      return 3;
    case Kind::Pow:
      return 4;
    default:
      return 5;
  }
}

void print_node(const Node* n, std::string& out) {
  auto child = [&out](const Node* c, int parent_prec, bool tight) {
    bool parens = precedence(c->kind) < parent_prec ||
                  (tight && precedence(c->kind) == parent_prec);
    if (parens) out += '(';
    print_node(c, out);
    if (parens) out += ')';
  };
  char buf[64];
  switch (n->kind) {
    case Kind::Constant:
      std::snprintf(buf, sizeof(buf), "%.12g", n->value);
      out += buf;
      break;
    case Kind::VarX:
      std::snprintf(buf, sizeof(buf), "x[%d]", n->index + 1);
      out += buf;
      break;
    case Kind::VarY:
      std::snprintf(buf, sizeof(buf), "y[%d]", n->index + 1);
      out += buf;
      break;
    case Kind::Neg:
      out += '-';
      child(n->a.get(), 3, true);
      break;
    case Kind::Sqrt:
    case Kind::Exp:
    case Kind::Log:
    case Kind::Sin:
    case Kind::Cos: {
      const char* name = n->kind == Kind::Sqrt  ? "sqrt"
                         : n->kind == Kind::Exp ? "exp"
                         : n->kind == Kind::Log ? "log"
                         : n->kind == Kind::Sin ? "sin"
                                                : "cos";
      out += name;
      out += '(';
      print_node(n->a.get(), out);
      out += ')';
      break;
    }
    case Kind::Add:
      child(n->a.get(), 1, false);
      out += " + ";
      child(n->b.get(), 1, true);
      break;
    case Kind::Sub:
      child(n->a.get(), 1, false);
      out += " - ";
      child(n->b.get(), 1, true);
      break;
    case Kind::Mul:
      child(n->a.get(), 2, false);
      out += "*";
      child(n->b.get(), 2, true);
      break;
    case Kind::Div:
      child(n->a.get(), 2, false);
      out += "/";
      child(n->b.get(), 2, true);
      break;
    case Kind::Pow:
      child(n->a.get(), 5, true);
      std::snprintf(buf, sizeof(buf), "^%d", n->index);
      out += buf;
      break;
  }
}

std::string print(const Node* n) {
  std::string out;
  print_node(n, out);
  return out;
}

// ---------------------------------------------------------------------------
// Differentiation with a process-wide memo
// ---------------------------------------------------------------------------

struct DerivKey {
  NodePtr node;  // keeps the source alive while the entry exists
  VarKind kind;
  int index;
  friend bool operator==(const DerivKey& l, const DerivKey& r) {
    return l.node.get() == r.node.get() && l.kind == r.kind &&
           l.index == r.index;
  }
};

struct DerivKeyHash {
  std::size_t operator()(const DerivKey& k) const {
    std::size_t h = reinterpret_cast<std::size_t>(k.node.get());
    h = h * 31 + static_cast<std::size_t>(k.kind) * 2 +
        static_cast<std::size_t>(k.index) * 7919;
    return h;
  }
};

class DerivCache {
 public:
  static DerivCache& instance() {
    static DerivCache cache;
    return cache;
  }
  bool lookup(const NodePtr& n, Var v, NodePtr& out) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = map_.find(DerivKey{n, v.kind, v.index});
    if (it == map_.end()) return false;
    out = it->second;
    return true;
  }
  void store(const NodePtr& n, Var v, NodePtr d) {
    std::lock_guard<std::mutex> lock(mu_);
    map_.emplace(DerivKey{n, v.kind, v.index}, std::move(d));
  }

 private:
  std::mutex mu_;
  std::unordered_map<DerivKey, NodePtr, DerivKeyHash> map_;
};

NodePtr diff(const NodePtr& n, Var v) {
  switch (n->kind) {
    case Kind::Constant:
      return constant(0.0);
    case Kind::VarX:
      return constant(v.kind == VarKind::Base && v.index == n->index ? 1.0
                                                                     : 0.0);
    case Kind::VarY:
      return constant(v.kind == VarKind::Fiber && v.index == n->index ? 1.0
                                                                      : 0.0);
    default:
      break;
  }
  NodePtr cached;
  DerivCache& cache = DerivCache::instance();
  if (cache.lookup(n, v, cached)) return cached;

  NodePtr result;
  switch (n->kind) {
    case Kind::Neg:
      result = neg(diff(n->a, v));
      break;
    case Kind::Add:
      result = add(diff(n->a, v), diff(n->b, v));
      break;
    case Kind::Sub:
      result = sub(diff(n->a, v), diff(n->b, v));
      break;
    case Kind::Mul:
      result = add(mul(diff(n->a, v), n->b), mul(n->a, diff(n->b, v)));
      break;
    case Kind::Div:
      // da/b - a*db/b^2
      result = sub(div(diff(n->a, v), n->b),
                   div(mul(n->a, diff(n->b, v)), pow_int(n->b, 2)));
      break;
    case Kind::Pow:
      result = mul(mul(constant(n->index), pow_int(n->a, n->index - 1)),
                   diff(n->a, v));
      break;
    case Kind::Sqrt:
      result = div(diff(n->a, v), mul(constant(2.0), n));
      break;
    case Kind::Exp:
      result = mul(diff(n->a, v), n);
      break;
    case Kind::Log:
      result = div(diff(n->a, v), n->a);
      break;
    case Kind::Sin:
      result = mul(diff(n->a, v), call(Kind::Cos, n->a));
      break;
    case Kind::Cos:
      result = neg(mul(diff(n->a, v), call(Kind::Sin, n->a)));
      break;
    default:
      result = constant(0.0);
      break;
  }
  cache.store(n, v, result);
  return result;
}

// ---------------------------------------------------------------------------
// Evaluation (memoized per call; trees are DAGs after interning)
// ---------------------------------------------------------------------------

using EvalMemo = std::unordered_map<const Node*, double>;

double eval_node(const Node* n, const ChartPoint& p, EvalMemo& memo) {
  switch (n->kind) {
    case Kind::Constant:
      return n->value;
    case Kind::VarX:
      return p.x()[n->index];
    case Kind::VarY:
      return p.y()[n->index];
    default:
      break;
  }
  auto it = memo.find(n);
  if (it != memo.end()) return it->second;

  double r = 0.0;
  switch (n->kind) {
    case Kind::Neg:
      r = -eval_node(n->a.get(), p, memo);
      break;
    case Kind::Add:
      r = eval_node(n->a.get(), p, memo) + eval_node(n->b.get(), p, memo);
      break;
    case Kind::Sub:
      r = eval_node(n->a.get(), p, memo) - eval_node(n->b.get(), p, memo);
      break;
    case Kind::Mul:
      r = eval_node(n->a.get(), p, memo) * eval_node(n->b.get(), p, memo);
      break;
    case Kind::Div: {
      double num = eval_node(n->a.get(), p, memo);
      double den = eval_node(n->b.get(), p, memo);
      if (den == 0.0) throw DomainError("division by zero", print(n));
      r = num / den;
      break;
    }
    case Kind::Pow: {
      double base = eval_node(n->a.get(), p, memo);
      if (base == 0.0 && n->index < 0)
        throw DomainError("zero raised to a negative power", print(n));
      r = std::pow(base, n->index);
      break;
    }
    case Kind::Sqrt: {
      double arg = eval_node(n->a.get(), p, memo);
      if (arg < 0.0) throw DomainError("square root of a negative value", print(n));
      r = std::sqrt(arg);
      break;
    }
    case Kind::Exp:
      r = std::exp(eval_node(n->a.get(), p, memo));
      break;
    case Kind::Log: {
      double arg = eval_node(n->a.get(), p, memo);
      if (arg <= 0.0)
        throw DomainError("logarithm of a non-positive value", print(n));
      r = std::log(arg);
      break;
    }
    case Kind::Sin:
      r = std::sin(eval_node(n->a.get(), p, memo));
      break;
    case Kind::Cos:
      r = std::cos(eval_node(n->a.get(), p, memo));
      break;
    default:
      break;
  }
  memo.emplace(n, r);
  return r;
}

}  // namespace
}  // namespace detail

using detail::Kind;

Expr detail_wrap(NodePtr n, int dim) { return Expr(std::move(n), dim); }
const NodePtr& detail_root(const Expr& e) { return e.root_; }

// ---------------------------------------------------------------------------
// Errors, ChartPoint
// ---------------------------------------------------------------------------

namespace {
std::string with_offset(const std::string& message, std::size_t offset) {
  return message + " (at byte " + std::to_string(offset) + ")";
}
}  // namespace

SyntaxError::SyntaxError(const std::string& message, std::size_t off)
    : ExprError(with_offset(message, off)), offset(off) {}

IndexError::IndexError(const std::string& message, std::size_t off)
    : ExprError(with_offset(message, off)), offset(off) {}

DomainError::DomainError(const std::string& message, std::string subexpr)
    : ExprError(message + " in `" + subexpr + "`"),
      subexpression(std::move(subexpr)) {}

ChartPoint::ChartPoint(Eigen::VectorXd x, Eigen::VectorXd y)
    : x_(std::move(x)), y_(std::move(y)) {
  if (x_.size() != y_.size() || x_.size() < 1)
    throw std::invalid_argument("chart point needs matching x and y of dim >= 1");
  if (y_.isZero(0.0))
    throw std::invalid_argument("chart point must have nonzero fiber coordinate y");
}

// ---------------------------------------------------------------------------
// Expr surface
// ---------------------------------------------------------------------------

namespace {
void require_valid(const Expr& e) {
  if (!e.valid()) throw std::invalid_argument("use of an empty expression");
}
int joint_dim(const Expr& a, const Expr& b) {
  require_valid(a);
  require_valid(b);
  if (a.dim() != b.dim())
    throw std::invalid_argument("expression dimensions differ");
  return a.dim();
}
void require_index(Var v, int dim) {
  if (v.index < 0 || v.index >= dim)
    throw std::invalid_argument("variable index outside dimension");
}
}  // namespace

Expr Expr::constant(double value, int dim) {
  return Expr(detail::constant(value), dim);
}

Expr Expr::variable(Var v, int dim) {
  require_index(v, dim);
  return Expr(detail::variable(v.kind, v.index), dim);
}

bool Expr::is_zero() const {
  return valid() && root_->kind == Kind::Constant && root_->value == 0.0;
}

bool Expr::is_constant() const {
  return valid() && root_->kind == Kind::Constant;
}

double Expr::constant_value() const {
  if (!is_constant()) throw std::logic_error("expression is not a constant");
  return root_->value;
}

bool Expr::identical(const Expr& other) const {
  return root_ == other.root_ && dim_ == other.dim_;
}

std::string Expr::str() const {
  require_valid(*this);
  return detail::print(root_.get());
}

Expr Expr::derivative(Var v) const { return differentiate(*this, v); }

double Expr::operator()(const ChartPoint& p) const { return eval(*this, p); }

Expr Expr::pow(int k) const {
  require_valid(*this);
  return Expr(detail::pow_int(root_, k), dim_);
}

Expr operator+(const Expr& a, const Expr& b) {
  int d = joint_dim(a, b);
  return Expr(detail::add(a.root_, b.root_), d);
}
Expr operator-(const Expr& a, const Expr& b) {
  int d = joint_dim(a, b);
  return Expr(detail::sub(a.root_, b.root_), d);
}
Expr operator*(const Expr& a, const Expr& b) {
  int d = joint_dim(a, b);
  return Expr(detail::mul(a.root_, b.root_), d);
}
Expr operator/(const Expr& a, const Expr& b) {
  int d = joint_dim(a, b);
  return Expr(detail::div(a.root_, b.root_), d);
}
Expr operator-(const Expr& a) {
  require_valid(a);
  return Expr(detail::neg(a.root_), a.dim_);
}
Expr operator*(double c, const Expr& e) {
  require_valid(e);
  return Expr(detail::mul(detail::constant(c), e.root_), e.dim_);
}
Expr operator/(const Expr& e, double c) {
  require_valid(e);
  return Expr(detail::div(e.root_, detail::constant(c)), e.dim_);
}

Expr sqrt(const Expr& e) {
  require_valid(e);
  return detail_wrap(detail::call(Kind::Sqrt, detail_root(e)), e.dim());
}
Expr exp(const Expr& e) {
  require_valid(e);
  return detail_wrap(detail::call(Kind::Exp, detail_root(e)), e.dim());
}
Expr log(const Expr& e) {
  require_valid(e);
  return detail_wrap(detail::call(Kind::Log, detail_root(e)), e.dim());
}
Expr sin(const Expr& e) {
  require_valid(e);
  return detail_wrap(detail::call(Kind::Sin, detail_root(e)), e.dim());
}
Expr cos(const Expr& e) {
  require_valid(e);
  return detail_wrap(detail::call(Kind::Cos, detail_root(e)), e.dim());
}

Expr differentiate(const Expr& e, Var v) {
  require_valid(e);
  require_index(v, e.dim());
  return detail_wrap(detail::diff(detail_root(e), v), e.dim());
}

double eval(const Expr& e, const ChartPoint& p) {
  require_valid(e);
  if (p.dim() != e.dim())
    throw std::invalid_argument("point dimension does not match expression");
  detail::EvalMemo memo;
  double r = detail::eval_node(detail_root(e).get(), p, memo);
  if (!std::isfinite(r)) throw DomainError("non-finite value", e.str());
  return r;
}

std::vector<double> eval_many(std::span<const Expr> exprs,
                              const ChartPoint& p) {
  detail::EvalMemo memo;
  std::vector<double> out;
  out.reserve(exprs.size());
  for (const Expr& e : exprs) {
    require_valid(e);
    if (p.dim() != e.dim())
      throw std::invalid_argument("point dimension does not match expression");
    double r = detail::eval_node(detail_root(e).get(), p, memo);
    if (!std::isfinite(r)) throw DomainError("non-finite value", e.str());
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

class Parser {
 public:
  Parser(std::string_view src, int dim) : src_(src), dim_(dim) {}

  Expr run() {
    Expr e = parse_expr();
    skip_ws();
    if (pos_ != src_.size())
      throw SyntaxError("unexpected trailing input", pos_);
    return e;
  }

 private:
  std::string_view src_;
  int dim_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
  }
  char peek() {
    skip_ws();
    return pos_ < src_.size() ? src_[pos_] : '\0';
  }
  bool consume(char c) {
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c, const char* what) {
    if (!consume(c)) throw SyntaxError(std::string("expected ") + what, pos_);
  }

  Expr parse_expr() {
    Expr e = parse_term();
    while (true) {
      if (consume('+'))
        e = e + parse_term();
      else if (consume('-'))
        e = e - parse_term();
      else
        return e;
    }
  }

  Expr parse_term() {
    Expr e = parse_factor();
    while (true) {
      if (consume('*'))
        e = e * parse_factor();
      else if (consume('/'))
        e = e / parse_factor();
      else
        return e;
    }
  }

  Expr parse_factor() {
    if (consume('-')) return -parse_factor();
    Expr e = parse_atom();
    if (consume('^')) {
      skip_ws();
      bool negative = consume('-');
      std::size_t start = pos_;
      long v = 0;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        v = v * 10 + (src_[pos_] - '0');
        ++pos_;
      }
      if (pos_ == start) throw SyntaxError("expected integer exponent", pos_);
      e = e.pow(static_cast<int>(negative ? -v : v));
    }
    return e;
  }

  Expr parse_atom() {
    skip_ws();
    if (pos_ >= src_.size()) throw SyntaxError("unexpected end of input", pos_);
    char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (c == '(') {
      ++pos_;
      Expr e = parse_expr();
      expect(')', "')'");
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
    throw SyntaxError("unexpected character", pos_);
  }

  Expr parse_number() {
    const char* begin = src_.data() + pos_;
    const char* end = src_.data() + src_.size();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc())
      throw SyntaxError("malformed number", pos_);
    pos_ += static_cast<std::size_t>(ptr - begin);
    return Expr::constant(value, dim_);
  }

  int parse_index() {
    expect('[', "'['");
    skip_ws();
    std::size_t start = pos_;
    long v = 0;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
      v = v * 10 + (src_[pos_] - '0');
      ++pos_;
    }
    if (pos_ == start) throw SyntaxError("expected coordinate index", pos_);
    if (v < 1 || v > dim_)
      throw IndexError("coordinate index " + std::to_string(v) +
                           " outside 1.." + std::to_string(dim_),
                       start);
    expect(']', "']'");
    return static_cast<int>(v - 1);
  }

  Expr parse_ident() {
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           std::isalpha(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
    std::string_view name = src_.substr(start, pos_ - start);

    if (name == "x" || name == "y") {
      if (peek() != '[')
        throw SyntaxError("coordinate needs an index, e.g. x[1]", pos_);
      int idx = parse_index();
      return Expr::variable(name == "x" ? Var::x(idx) : Var::y(idx), dim_);
    }
    if (name == "dot") return parse_dot(start);

    expect('(', "'(' after function name");
    Expr arg = parse_expr();
    expect(')', "')'");
    if (name == "sqrt") return sqrt(arg);
    if (name == "exp") return exp(arg);
    if (name == "log") return log(arg);
    if (name == "sin") return sin(arg);
    if (name == "cos") return cos(arg);
    throw SyntaxError("unknown function '" + std::string(name) + "'", start);
  }

  // dot(x,y) and friends expand to coordinate sums at parse time.
  Expr parse_dot(std::size_t start) {
    expect('(', "'(' after dot");
    VarKind first = parse_dot_arg();
    expect(',', "','");
    VarKind second = parse_dot_arg();
    expect(')', "')'");
    (void)start;
    Expr sum = Expr::constant(0.0, dim_);
    for (int i = 0; i < dim_; ++i) {
      Expr lhs = Expr::variable(Var{first, i}, dim_);
      Expr rhs = Expr::variable(Var{second, i}, dim_);
      sum = sum + lhs * rhs;
    }
    return sum;
  }

  VarKind parse_dot_arg() {
    skip_ws();
    if (pos_ < src_.size() && (src_[pos_] == 'x' || src_[pos_] == 'y')) {
      VarKind k = src_[pos_] == 'x' ? VarKind::Base : VarKind::Fiber;
      ++pos_;
      return k;
    }
    throw SyntaxError("dot arguments must be x or y", pos_);
  }
};

}  // namespace

Expr parse(std::string_view source, int dim) {
  if (dim < 1) throw std::invalid_argument("dimension must be positive");
  return Parser(source, dim).run();
}

// ---------------------------------------------------------------------------
// Jets
// ---------------------------------------------------------------------------

JetValue::JetValue(ChartPoint point, int order,
                   std::map<MultiIndex, double> entries)
    : point_(std::move(point)), order_(order), entries_(std::move(entries)) {}

double JetValue::value() const { return entries_.at({}); }

double JetValue::entry(std::span<const Var> vars) const {
  MultiIndex idx;
  idx.reserve(vars.size());
  for (Var v : vars) idx.push_back(v.slot(point_.dim()));
  return entry(std::move(idx));
}

double JetValue::entry(MultiIndex index) const {
  std::sort(index.begin(), index.end());
  auto it = entries_.find(index);
  if (it == entries_.end())
    throw std::out_of_range("jet entry beyond requested order");
  return it->second;
}

namespace {
void fill_jet(const Expr& e, const ChartPoint& p, int order,
              JetValue::MultiIndex& index, int min_slot,
              std::map<JetValue::MultiIndex, double>& out) {
  out.emplace(index, eval(e, p));
  if (static_cast<int>(index.size()) == order) return;
  int slots = 2 * e.dim();
  for (int s = min_slot; s < slots; ++s) {
    Expr d = differentiate(e, Var::from_slot(s, e.dim()));
    index.push_back(s);
    fill_jet(d, p, order, index, s, out);
    index.pop_back();
  }
}
}  // namespace

JetValue evaluate_jet(const Expr& e, const ChartPoint& p, int order) {
  require_valid(e);
  if (order < 0) throw std::invalid_argument("jet order must be >= 0");
  std::map<JetValue::MultiIndex, double> entries;
  JetValue::MultiIndex index;
  fill_jet(e, p, order, index, 0, entries);
  return JetValue(p, order, std::move(entries));
}

// ---------------------------------------------------------------------------
// Homogeneity
// ---------------------------------------------------------------------------

HomogeneityReport check_homogeneity(const Expr& e, int degree,
                                    std::span<const ChartPoint> samples,
                                    std::span<const double> scales,
                                    double tol) {
  require_valid(e);
  if (samples.empty()) throw std::invalid_argument("need at least one sample");
  for (double t : scales)
    if (t <= 0) throw std::invalid_argument("scales must be positive");

  HomogeneityReport report;
  report.degree = degree;
  report.tol = tol;
  for (const ChartPoint& p : samples) {
    double base = eval(e, p);
    for (double t : scales) {
      double scaled = eval(e, p.scaled_fiber(t));
      double expected = std::pow(t, degree) * base;
      double err = std::abs(scaled - expected) /
                   std::max({std::abs(scaled), std::abs(expected), 1e-12});
      report.max_scale_error = std::max(report.max_scale_error, err);
    }
    double radial = 0.0;
    for (int i = 0; i < e.dim(); ++i)
      radial += p.y()[i] * eval(differentiate(e, Var::y(i)), p);
    double expected = degree * base;
    double err = std::abs(radial - expected) /
                 std::max({std::abs(radial), std::abs(expected), 1e-12});
    report.max_euler_error = std::max(report.max_euler_error, err);
  }
  report.passed =
      report.max_scale_error < tol && report.max_euler_error < tol;
  return report;
}

}  // namespace finsler
