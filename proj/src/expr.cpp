#include "nhflow/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>

namespace nhflow {

Chart::Chart(int n, int m, std::vector<std::string> names,
             std::vector<Interval> domain)
    : n_(n), m_(m), names_(std::move(names)), domain_(std::move(domain)) {
  if (n_ < 2 || m_ < 1)
    throw std::invalid_argument("chart requires n >= 2 and m >= 1");
  if (static_cast<int>(names_.size()) < n_ + m_)
    throw std::invalid_argument("chart needs at least n+m coordinate names");
  std::set<std::string> uniq(names_.begin(), names_.end());
  if (uniq.size() != names_.size())
    throw std::invalid_argument("coordinate names must be unique");
  domain_.resize(names_.size());
}

int Chart::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<int>(i);
  return -1;
}

Chart Chart::with_parameter(const std::string& name) const {
  auto names = names_;
  names.push_back(name);
  auto dom = domain_;
  dom.push_back(Interval{0.0, 1.0, false});
  return Chart(n_, m_, std::move(names), std::move(dom));
}

namespace {

long long gcd_ll(long long a, long long b) {
  a = std::llabs(a);
  b = std::llabs(b);
  while (b) {
    long long t = a % b;
    a = b;
    b = t;
  }
  return a == 0 ? 1 : a;
}

void normalize_exponent(long long& num, long long& den) {
  if (den == 0) throw std::invalid_argument("zero exponent denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  long long g = gcd_ll(num, den);
  num /= g;
  den /= g;
}

int op_rank(Op op) { return static_cast<int>(op); }

std::size_t count_nodes(const std::vector<ExprPtr>& kids) {
  std::size_t s = 1;
  for (const auto& k : kids) s += k->nnodes;
  return s;
}

ExprPtr make_node(Op op, std::vector<ExprPtr> kids) {
  auto e = std::make_shared<Expr>(op);
  e->kids = std::move(kids);
  e->nnodes = count_nodes(e->kids);
  return e;
}

bool is_const(const ExprPtr& e, double v) {
  return e->op == Op::Const && e->cval == v;
}

}  // namespace

bool is_zero(const ExprPtr& e) { return is_const(e, 0.0); }
bool is_one(const ExprPtr& e) { return is_const(e, 1.0); }

std::size_t node_count(const ExprPtr& e) { return e->nnodes; }

int compare(const ExprPtr& a, const ExprPtr& b) {
  if (a.get() == b.get()) return 0;
  if (op_rank(a->op) != op_rank(b->op))
    return op_rank(a->op) < op_rank(b->op) ? -1 : 1;
  switch (a->op) {
    case Op::Const:
      if (a->cval < b->cval) return -1;
      if (a->cval > b->cval) return 1;
      return 0;
    case Op::Coord:
      return a->coord < b->coord ? -1 : (a->coord > b->coord ? 1 : 0);
    case Op::Pow: {
      if (int c = compare(a->kids[0], b->kids[0])) return c;
      double ea = double(a->pnum) / double(a->pden);
      double eb = double(b->pnum) / double(b->pden);
      if (ea < eb) return -1;
      if (ea > eb) return 1;
      return 0;
    }
    default: {
      if (a->kids.size() != b->kids.size())
        return a->kids.size() < b->kids.size() ? -1 : 1;
      for (std::size_t i = 0; i < a->kids.size(); ++i)
        if (int c = compare(a->kids[i], b->kids[i])) return c;
      return 0;
    }
  }
}

namespace {

struct ExprLess {
  bool operator()(const ExprPtr& a, const ExprPtr& b) const {
    return compare(a, b) < 0;
  }
};

// Splits a normalized term into (coefficient, non-constant core).
std::pair<double, ExprPtr> split_coeff(const ExprPtr& t) {
  if (t->op == Op::Const) return {t->cval, nullptr};
  if (t->op == Op::Mul && t->kids[0]->op == Op::Const) {
    double c = t->kids[0]->cval;
    std::vector<ExprPtr> rest(t->kids.begin() + 1, t->kids.end());
    if (rest.size() == 1) return {c, rest[0]};
    return {c, make_node(Op::Mul, std::move(rest))};
  }
  return {1.0, t};
}

std::pair<ExprPtr, std::pair<long long, long long>> split_power(
    const ExprPtr& f) {
  if (f->op == Op::Pow) return {f->kids[0], {f->pnum, f->pden}};
  return {f, {1, 1}};
}

}  // namespace

ExprPtr constant(double c) {
  auto e = std::make_shared<Expr>(Op::Const);
  e->cval = (c == 0.0) ? 0.0 : c;  // normalize -0.0
  return e;
}

ExprPtr coordinate(int index) {
  if (index < 0) throw std::invalid_argument("negative coordinate index");
  auto e = std::make_shared<Expr>(Op::Coord);
  e->coord = index;
  return e;
}

ExprPtr add(std::vector<ExprPtr> terms) {
  double cacc = 0.0;
  std::map<ExprPtr, double, ExprLess> by_core;
  std::vector<ExprPtr> stack(terms.rbegin(), terms.rend());
  while (!stack.empty()) {
    ExprPtr t = stack.back();
    stack.pop_back();
    if (t->op == Op::Add) {
      for (auto it = t->kids.rbegin(); it != t->kids.rend(); ++it)
        stack.push_back(*it);
      continue;
    }
    auto [c, core] = split_coeff(t);
    if (!core) {
      cacc += c;
      continue;
    }
    by_core[core] += c;
  }
  std::vector<ExprPtr> out;
  if (cacc != 0.0) out.push_back(constant(cacc));
  for (auto& [core, c] : by_core) {
    if (c == 0.0) continue;
    if (c == 1.0)
      out.push_back(core);
    else
      out.push_back(mul2(constant(c), core));
  }
  if (out.empty()) return constant(0.0);
  if (out.size() == 1) return out[0];
  return make_node(Op::Add, std::move(out));
}

ExprPtr add2(const ExprPtr& a, const ExprPtr& b) { return add({a, b}); }

ExprPtr sub(const ExprPtr& a, const ExprPtr& b) { return add({a, negate(b)}); }

ExprPtr negate(const ExprPtr& a) { return mul2(constant(-1.0), a); }

ExprPtr mul(std::vector<ExprPtr> factors) {
  double cacc = 1.0;
  std::map<ExprPtr, std::pair<long long, long long>, ExprLess> by_base;
  std::vector<ExprPtr> stack(factors.rbegin(), factors.rend());
  while (!stack.empty()) {
    ExprPtr f = stack.back();
    stack.pop_back();
    if (f->op == Op::Mul) {
      for (auto it = f->kids.rbegin(); it != f->kids.rend(); ++it)
        stack.push_back(*it);
      continue;
    }
    if (f->op == Op::Const) {
      cacc *= f->cval;
      continue;
    }
    auto [base, e] = split_power(f);
    auto it = by_base.find(base);
    if (it == by_base.end()) {
      by_base.emplace(base, e);
    } else {
      auto& [n0, d0] = it->second;
      long long n = n0 * e.second + e.first * d0;
      long long d = d0 * e.second;
      normalize_exponent(n, d);
      it->second = {n, d};
    }
  }
  if (cacc == 0.0) return constant(0.0);
  std::vector<ExprPtr> out;
  for (auto& [base, e] : by_base) {
    if (e.first == 0) continue;
    out.push_back(pow_rational(base, e.first, e.second));
  }
  if (out.empty()) return constant(cacc);
  if (cacc != 1.0) {
    out.insert(out.begin(), constant(cacc));
  } else if (out.size() == 1) {
    return out[0];
  }
  return make_node(Op::Mul, std::move(out));
}

ExprPtr mul2(const ExprPtr& a, const ExprPtr& b) { return mul({a, b}); }

ExprPtr divide(const ExprPtr& a, const ExprPtr& b) {
  return mul2(a, pow_rational(b, -1, 1));
}

ExprPtr pow_rational(const ExprPtr& base, long long num, long long den) {
  normalize_exponent(num, den);
  if (num == 0) return constant(1.0);
  if (num == 1 && den == 1) return base;
  if (base->op == Op::Const) {
    double b = base->cval;
    if (den == 1) {
      if (b != 0.0 || num > 0) {
        double r = 1.0;
        double x = (num > 0) ? b : 1.0 / b;
        for (long long k = std::llabs(num); k > 0; --k) r *= x;
        return constant(r);
      }
    } else if (b > 0.0) {
      return constant(std::pow(b, double(num) / double(den)));
    } else if (b == 0.0 && num > 0) {
      return constant(0.0);
    }
  }
  if (base->op == Op::Pow && den == 1) {
    // (b^(p/q))^n = b^(np/q), valid for integer outer exponents
    return pow_rational(base->kids[0], base->pnum * num, base->pden);
  }
  auto e = std::make_shared<Expr>(Op::Pow);
  e->kids = {base};
  e->pnum = num;
  e->pden = den;
  e->nnodes = 1 + base->nnodes;
  return e;
}

ExprPtr apply_fn(Op fn, const ExprPtr& arg) {
  switch (fn) {
    case Op::Sin:
      if (arg->op == Op::Const) return constant(std::sin(arg->cval));
      break;
    case Op::Cos:
      if (arg->op == Op::Const) return constant(std::cos(arg->cval));
      break;
    case Op::Exp:
      if (arg->op == Op::Const) return constant(std::exp(arg->cval));
      break;
    case Op::Log:
      if (arg->op == Op::Const && arg->cval > 0.0)
        return constant(std::log(arg->cval));
      break;
    case Op::Sqrt:
      if (arg->op == Op::Const && arg->cval >= 0.0)
        return constant(std::sqrt(arg->cval));
      break;
    case Op::Abs:
      if (arg->op == Op::Const) return constant(std::fabs(arg->cval));
      break;
    default:
      throw std::invalid_argument("apply_fn: not a function op");
  }
  return make_node(fn, {arg});
}

ExprPtr sin_(const ExprPtr& a) { return apply_fn(Op::Sin, a); }
ExprPtr cos_(const ExprPtr& a) { return apply_fn(Op::Cos, a); }
ExprPtr exp_(const ExprPtr& a) { return apply_fn(Op::Exp, a); }
ExprPtr log_(const ExprPtr& a) { return apply_fn(Op::Log, a); }
ExprPtr sqrt_(const ExprPtr& a) { return apply_fn(Op::Sqrt, a); }
ExprPtr abs_(const ExprPtr& a) { return apply_fn(Op::Abs, a); }

namespace {

class DiffContext {
public:
  explicit DiffContext(int coord) : coord_(coord) {}

  ExprPtr diff(const ExprPtr& f) {
    auto it = memo_.find(f.get());
    if (it != memo_.end()) return it->second;
    ExprPtr d = compute(f);
    memo_.emplace(f.get(), d);
    return d;
  }

private:
  ExprPtr compute(const ExprPtr& f) {
    switch (f->op) {
      case Op::Const:
        return constant(0.0);
      case Op::Coord:
        return constant(f->coord == coord_ ? 1.0 : 0.0);
      case Op::Add: {
        std::vector<ExprPtr> ds;
        ds.reserve(f->kids.size());
        for (const auto& k : f->kids) ds.push_back(diff(k));
        return add(std::move(ds));
      }
      case Op::Mul: {
        std::vector<ExprPtr> terms;
        for (std::size_t i = 0; i < f->kids.size(); ++i) {
          ExprPtr di = diff(f->kids[i]);
          if (is_zero(di)) continue;
          std::vector<ExprPtr> fac;
          fac.reserve(f->kids.size());
          for (std::size_t j = 0; j < f->kids.size(); ++j)
            fac.push_back(i == j ? di : f->kids[j]);
          terms.push_back(mul(std::move(fac)));
        }
        return add(std::move(terms));
      }
      case Op::Pow: {
        const ExprPtr& b = f->kids[0];
        ExprPtr db = diff(b);
        if (is_zero(db)) return constant(0.0);
        ExprPtr coeff = constant(double(f->pnum) / double(f->pden));
        ExprPtr rest = pow_rational(b, f->pnum - f->pden, f->pden);
        return mul({coeff, rest, db});
      }
      case Op::Sin:
        return mul2(cos_(f->kids[0]), diff(f->kids[0]));
      case Op::Cos:
        return negate(mul2(sin_(f->kids[0]), diff(f->kids[0])));
      case Op::Exp:
        return mul2(f, diff(f->kids[0]));
      case Op::Log:
        return divide(diff(f->kids[0]), f->kids[0]);
      case Op::Sqrt:
        return mul({constant(0.5), pow_rational(f->kids[0], -1, 2),
                    diff(f->kids[0])});
      case Op::Abs:
        // d|u| = u/|u| du, valid away from u = 0
        return mul({f->kids[0], pow_rational(f, -1, 1), diff(f->kids[0])});
    }
    throw std::logic_error("unreachable");
  }

  int coord_;
  std::unordered_map<const Expr*, ExprPtr> memo_;
};

}  // namespace

ExprPtr differentiate(const ExprPtr& f, int coord) {
  if (coord < 0) throw std::invalid_argument("negative coordinate index");
  DiffContext ctx(coord);
  return ctx.diff(f);
}

double Evaluator::operator()(const ExprPtr& e) { return eval(e.get()); }

double Evaluator::eval(const Expr* e) {
  if (e->op == Op::Const) return e->cval;
  if (e->op == Op::Coord) {
    if (e->coord >= static_cast<int>(vals_.size()))
      throw EvalError("point has no value for coordinate index " +
                      std::to_string(e->coord));
    return vals_[e->coord];
  }
  auto it = memo_.find(e);
  if (it != memo_.end()) return it->second;
  double r = 0.0;
  switch (e->op) {
    case Op::Add:
      for (const auto& k : e->kids) r += eval(k.get());
      break;
    case Op::Mul: {
      r = 1.0;
      for (const auto& k : e->kids) r *= eval(k.get());
      break;
    }
    case Op::Pow: {
      double b = eval(e->kids[0].get());
      if (e->pden == 1) {
        if (b == 0.0 && e->pnum < 0)
          throw EvalError("division by zero in " +
                          to_string(ExprPtr(e->kids[0])));
        double x = e->pnum > 0 ? b : 1.0 / b;
        r = 1.0;
        for (long long k = std::llabs(e->pnum); k > 0; --k) r *= x;
      } else {
        // fractional exponent via exp(log), requires positive base
        if (b < 0.0)
          throw EvalError("fractional power of negative base in " +
                          to_string(ExprPtr(e->kids[0])));
        if (b == 0.0) {
          if (e->pnum < 0)
            throw EvalError("division by zero in " +
                            to_string(ExprPtr(e->kids[0])));
          r = 0.0;
        } else {
          r = std::exp(std::log(b) * double(e->pnum) / double(e->pden));
        }
      }
      break;
    }
    case Op::Sin:
      r = std::sin(eval(e->kids[0].get()));
      break;
    case Op::Cos:
      r = std::cos(eval(e->kids[0].get()));
      break;
    case Op::Exp:
      r = std::exp(eval(e->kids[0].get()));
      break;
    case Op::Log: {
      double u = eval(e->kids[0].get());
      if (u <= 0.0)
        throw EvalError("log of non-positive value in log(" +
                        to_string(ExprPtr(e->kids[0])) + ")");
      r = std::log(u);
      break;
    }
    case Op::Sqrt: {
      double u = eval(e->kids[0].get());
      if (u < 0.0)
        throw EvalError("sqrt of negative value in sqrt(" +
                        to_string(ExprPtr(e->kids[0])) + ")");
      r = std::sqrt(u);
      break;
    }
    case Op::Abs:
      r = std::fabs(eval(e->kids[0].get()));
      break;
    default:
      throw std::logic_error("unreachable");
  }
  memo_.emplace(e, r);
  return r;
}

double evaluate(const ExprPtr& f, std::span<const double> values) {
  Evaluator ev(values);
  return ev(f);
}

double evaluate(const ExprPtr& f, const Point& p) {
  try {
    return evaluate(f, std::span<const double>(p.u));
  } catch (const EvalError& err) {
    std::string at = " at (";
    for (std::size_t i = 0; i < p.u.size(); ++i) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%g", p.u[i]);
      at += (i ? "," : "") + std::string(buf);
    }
    throw EvalError(std::string(err.what()) + at + ")");
  }
}

namespace {

const char* fn_name(Op op) {
  switch (op) {
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sqrt: return "sqrt";
    case Op::Abs: return "abs";
    default: return nullptr;
  }
}

std::string num_str(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// precedence: 0 sum, 1 product, 2 power base / atom
void print_rec(std::string& out, const ExprPtr& e, int parent_prec,
               const Chart* chart) {
  switch (e->op) {
    case Op::Const: {
      std::string s = num_str(e->cval);
      if (e->cval < 0.0 && parent_prec >= 1)
        out += "(" + s + ")";
      else
        out += s;
      return;
    }
    case Op::Coord:
      if (chart && e->coord < chart->num_symbols())
        out += chart->name(e->coord);
      else
        out += "u" + std::to_string(e->coord);
      return;
    case Op::Add: {
      std::string s;
      for (std::size_t i = 0; i < e->kids.size(); ++i) {
        std::string t;
        print_rec(t, e->kids[i], 0, chart);
        if (i == 0) {
          s += t;
        } else if (!t.empty() && t[0] == '-') {
          s += " - " + t.substr(1);
        } else {
          s += " + " + t;
        }
      }
      if (parent_prec > 0)
        out += "(" + s + ")";
      else
        out += s;
      return;
    }
    case Op::Mul: {
      std::string s;
      for (std::size_t i = 0; i < e->kids.size(); ++i) {
        if (i) s += "*";
        print_rec(s, e->kids[i], 1, chart);
      }
      if (parent_prec > 1)
        out += "(" + s + ")";
      else
        out += s;
      return;
    }
    case Op::Pow: {
      print_rec(out, e->kids[0], 2, chart);
      out += "^";
      if (e->pden == 1 && e->pnum >= 0) {
        out += std::to_string(e->pnum);
      } else if (e->pden == 1) {
        out += "(" + std::to_string(e->pnum) + ")";
      } else {
        out += "(" + std::to_string(e->pnum) + "/" + std::to_string(e->pden) +
               ")";
      }
      return;
    }
    default: {
      out += fn_name(e->op);
      out += "(";
      print_rec(out, e->kids[0], 0, chart);
      out += ")";
      return;
    }
  }
}

}  // namespace

std::string to_string(const ExprPtr& e) {
  std::string s;
  print_rec(s, e, 0, nullptr);
  return s;
}

std::string to_string(const ExprPtr& e, const Chart& chart) {
  std::string s;
  print_rec(s, e, 0, &chart);
  return s;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

struct Token {
  enum Kind { Num, Ident, Sym, End } kind = End;
  std::string text;
  double num = 0.0;
  long long inum = 0, iden = 1;  // exact rational when available
  bool is_rational = false;
  int line = 1, col = 1;
};

class Lexer {
public:
  Lexer(std::string_view src, const Chart& chart)
      : src_(src), chart_(chart) {
    advance();
  }

  const Token& peek() const { return tok_; }

  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

  [[noreturn]] void fail(const std::string& msg, const Token& t) const {
    throw ParseError(msg + " at line " + std::to_string(t.line) + ", column " +
                         std::to_string(t.col),
                     t.line, t.col);
  }

  const Chart& chart() const { return chart_; }

private:
  void advance() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '\n') {
        ++line_;
        col_ = 1;
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++col_;
        ++pos_;
      } else {
        break;
      }
    }
    tok_ = Token{};
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= src_.size()) {
      tok_.kind = Token::End;
      return;
    }
    char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      lex_number();
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t s = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '_'))
        ++pos_;
      tok_.kind = Token::Ident;
      tok_.text = std::string(src_.substr(s, pos_ - s));
      col_ += static_cast<int>(pos_ - s);
      return;
    }
    tok_.kind = Token::Sym;
    tok_.text = std::string(1, c);
    ++pos_;
    ++col_;
  }

  void lex_number() {
    std::size_t s = pos_;
    long long mant = 0, frac_den = 1;
    bool exact = true;
    while (pos_ < src_.size() &&
           std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
      if (mant > (1LL << 50))
        exact = false;
      else
        mant = mant * 10 + (src_[pos_] - '0');
      ++pos_;
    }
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      while (pos_ < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        if (mant > (1LL << 50) || frac_den > (1LL << 50)) {
          exact = false;
        } else {
          mant = mant * 10 + (src_[pos_] - '0');
          frac_den *= 10;
        }
        ++pos_;
      }
    }
    int exp10 = 0;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      int sign = 1;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) {
        if (src_[pos_] == '-') sign = -1;
        ++pos_;
      }
      if (pos_ < src_.size() &&
          std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        int e = 0;
        while (pos_ < src_.size() &&
               std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
          e = e * 10 + (src_[pos_] - '0');
          ++pos_;
        }
        exp10 = sign * e;
      } else {
        pos_ = save;  // not an exponent
      }
    }
    std::string text(src_.substr(s, pos_ - s));
    tok_.kind = Token::Num;
    tok_.text = text;
    tok_.num = std::strtod(text.c_str(), nullptr);
    if (exact && std::llabs(exp10) <= 15) {
      long long n = mant, d = frac_den;
      for (int k = 0; k < exp10 && n < (1LL << 50); ++k) n *= 10;
      for (int k = 0; k > exp10 && d < (1LL << 50); --k) d *= 10;
      if (n < (1LL << 52) && d < (1LL << 52)) {
        tok_.is_rational = true;
        tok_.inum = n;
        tok_.iden = d;
      }
    }
    col_ += static_cast<int>(pos_ - s);
  }

  std::string_view src_;
  const Chart& chart_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

class Parser {
public:
  explicit Parser(Lexer& lx) : lx_(lx) {}

  ExprPtr parse() {
    ExprPtr e = parse_sum();
    if (lx_.peek().kind != Token::End)
      lx_.fail("unexpected token '" + lx_.peek().text + "'", lx_.peek());
    return e;
  }

private:
  ExprPtr parse_sum() {
    ExprPtr e = parse_product();
    while (lx_.peek().kind == Token::Sym &&
           (lx_.peek().text == "+" || lx_.peek().text == "-")) {
      std::string op = lx_.next().text;
      ExprPtr rhs = parse_product();
      e = (op == "+") ? add2(e, rhs) : sub(e, rhs);
    }
    return e;
  }

  ExprPtr parse_product() {
    ExprPtr e = parse_unary();
    while (lx_.peek().kind == Token::Sym &&
           (lx_.peek().text == "*" || lx_.peek().text == "/")) {
      std::string op = lx_.next().text;
      ExprPtr rhs = parse_unary();
      e = (op == "*") ? mul2(e, rhs) : divide(e, rhs);
    }
    return e;
  }

  ExprPtr parse_unary() {
    bool neg = false;
    while (lx_.peek().kind == Token::Sym &&
           (lx_.peek().text == "+" || lx_.peek().text == "-")) {
      if (lx_.next().text == "-") neg = !neg;
    }
    ExprPtr e = parse_power();
    return neg ? negate(e) : e;
  }

  ExprPtr parse_power() {
    ExprPtr base = parse_atom();
    if (lx_.peek().kind == Token::Sym && lx_.peek().text == "^") {
      lx_.next();
      auto [num, den] = parse_exponent();
      return pow_rational(base, num, den);
    }
    return base;
  }

  std::pair<long long, long long> parse_exponent() {
    bool neg = false;
    bool paren = false;
    if (lx_.peek().kind == Token::Sym && lx_.peek().text == "(") {
      lx_.next();
      paren = true;
    }
    while (lx_.peek().kind == Token::Sym &&
           (lx_.peek().text == "-" || lx_.peek().text == "+")) {
      if (lx_.next().text == "-") neg = !neg;
    }
    Token t = lx_.peek();
    if (t.kind != Token::Num || !t.is_rational)
      lx_.fail("exponent must be a rational constant", t);
    lx_.next();
    long long num = t.inum, den = t.iden;
    if (paren && lx_.peek().kind == Token::Sym && lx_.peek().text == "/") {
      lx_.next();
      Token d = lx_.peek();
      if (d.kind != Token::Num || !d.is_rational || d.iden != 1 || d.inum == 0)
        lx_.fail("exponent denominator must be a nonzero integer", d);
      lx_.next();
      den *= d.inum;
    }
    if (paren) {
      Token c = lx_.peek();
      if (c.kind != Token::Sym || c.text != ")")
        lx_.fail("expected ')' after exponent", c);
      lx_.next();
    }
    return {neg ? -num : num, den};
  }

  ExprPtr parse_atom() {
    Token t = lx_.peek();
    if (t.kind == Token::Num) {
      lx_.next();
      return constant(t.num);
    }
    if (t.kind == Token::Sym && t.text == "(") {
      lx_.next();
      ExprPtr e = parse_sum();
      Token c = lx_.peek();
      if (c.kind != Token::Sym || c.text != ")")
        lx_.fail("expected ')'", c);
      lx_.next();
      return e;
    }
    if (t.kind == Token::Ident) {
      lx_.next();
      static const std::unordered_map<std::string, Op> fns = {
          {"sin", Op::Sin}, {"cos", Op::Cos},   {"exp", Op::Exp},
          {"log", Op::Log}, {"sqrt", Op::Sqrt}, {"abs", Op::Abs}};
      auto fit = fns.find(t.text);
      if (fit != fns.end()) {
        Token o = lx_.peek();
        if (o.kind != Token::Sym || o.text != "(")
          lx_.fail("expected '(' after function '" + t.text + "'", o);
        lx_.next();
        std::vector<ExprPtr> args;
        args.push_back(parse_sum());
        while (lx_.peek().kind == Token::Sym && lx_.peek().text == ",") {
          lx_.next();
          args.push_back(parse_sum());
        }
        Token c = lx_.peek();
        if (c.kind != Token::Sym || c.text != ")")
          lx_.fail("expected ')'", c);
        lx_.next();
        if (args.size() != 1)
          lx_.fail("function '" + t.text + "' takes 1 argument, got " +
                       std::to_string(args.size()),
                   t);
        return apply_fn(fit->second, args[0]);
      }
      int idx = lx_.chart().index_of(t.text);
      if (idx < 0) lx_.fail("unknown identifier '" + t.text + "'", t);
      return coordinate(idx);
    }
    lx_.fail(t.kind == Token::End ? std::string("unexpected end of input")
                                  : "unexpected token '" + t.text + "'",
             t);
  }

  Lexer& lx_;
};

}  // namespace

ExprPtr parse_scalar_field(std::string_view src, const Chart& chart) {
  Lexer lx(src, chart);
  Parser p(lx);
  return p.parse();
}

}  // namespace nhflow
