#ifndef NHFLOW_EXPR_HPP
#define NHFLOW_EXPR_HPP

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace nhflow {

inline constexpr double kTwoPi = 6.2831853071795864769;

struct Interval {
  double lo = 0.0;
  double hi = kTwoPi;
  bool periodic = true;
};

/// Coordinate chart with n horizontal and m vertical coordinates.
/// Horizontal names come first. Names beyond n+m are passive parameters
/// (e.g. a deformation parameter) that fields may reference but that carry
/// no geometric role.
class Chart {
public:
  Chart(int n, int m, std::vector<std::string> names,
        std::vector<Interval> domain = {});

  int n() const { return n_; }
  int m() const { return m_; }
  int dim() const { return n_ + m_; }
  int num_symbols() const { return static_cast<int>(names_.size()); }

  const std::string& name(int i) const { return names_[i]; }
  const std::vector<std::string>& names() const { return names_; }
  const Interval& domain(int i) const { return domain_[i]; }

  /// Index of a coordinate name, or -1.
  int index_of(std::string_view name) const;

  /// Same chart plus one trailing parameter symbol.
  Chart with_parameter(const std::string& name) const;

private:
  int n_;
  int m_;
  std::vector<std::string> names_;
  std::vector<Interval> domain_;
};

struct Point {
  const Chart* chart = nullptr;
  std::vector<double> u;
};

enum class Op : std::uint8_t {
  Const,
  Coord,
  Add,
  Mul,
  Pow,
  Sin,
  Cos,
  Exp,
  Log,
  Sqrt,
  Abs,
};

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Immutable expression node. Built only through the maker functions below,
/// which keep every tree in a flattened, constant-folded, canonically ordered
/// normal form.
class Expr {
public:
  Op op;
  double cval = 0.0;                   // Op::Const
  int coord = -1;                      // Op::Coord
  long long pnum = 1, pden = 1;        // Op::Pow exponent pnum/pden
  std::vector<ExprPtr> kids;
  std::size_t nnodes = 1;

  explicit Expr(Op o) : op(o) {}
};

ExprPtr constant(double c);
ExprPtr coordinate(int index);
ExprPtr add(std::vector<ExprPtr> terms);
ExprPtr add2(const ExprPtr& a, const ExprPtr& b);
ExprPtr sub(const ExprPtr& a, const ExprPtr& b);
ExprPtr mul(std::vector<ExprPtr> factors);
ExprPtr mul2(const ExprPtr& a, const ExprPtr& b);
ExprPtr divide(const ExprPtr& a, const ExprPtr& b);
ExprPtr negate(const ExprPtr& a);
ExprPtr pow_rational(const ExprPtr& base, long long num, long long den = 1);
ExprPtr apply_fn(Op fn, const ExprPtr& arg);
ExprPtr sin_(const ExprPtr& a);
ExprPtr cos_(const ExprPtr& a);
ExprPtr exp_(const ExprPtr& a);
ExprPtr log_(const ExprPtr& a);
ExprPtr sqrt_(const ExprPtr& a);
ExprPtr abs_(const ExprPtr& a);

/// Total order on normalized trees; 0 iff structurally equal.
int compare(const ExprPtr& a, const ExprPtr& b);

bool is_zero(const ExprPtr& e);
bool is_one(const ExprPtr& e);

std::size_t node_count(const ExprPtr& e);

/// Exact partial derivative with respect to coordinate index.
ExprPtr differentiate(const ExprPtr& f, int coord);

std::string to_string(const ExprPtr& e);
std::string to_string(const ExprPtr& e, const Chart& chart);

struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, int line, int col)
      : std::runtime_error(msg), line(line), col(col) {}
  int line;
  int col;
};

struct EvalError : std::runtime_error {
  explicit EvalError(const std::string& msg) : std::runtime_error(msg) {}
};

ExprPtr parse_scalar_field(std::string_view src, const Chart& chart);

/// Memoizing evaluator for one point over a shared expression DAG.
class Evaluator {
public:
  explicit Evaluator(std::span<const double> values) : vals_(values) {}
  double operator()(const ExprPtr& e);

private:
  double eval(const Expr* e);

  std::span<const double> vals_;
  std::unordered_map<const Expr*, double> memo_;
};

double evaluate(const ExprPtr& f, std::span<const double> values);
double evaluate(const ExprPtr& f, const Point& p);

}  // namespace nhflow

#endif
