#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "z22/errors.hpp"

namespace z22 {

using Rational = mpq_class;

inline Rational rat(long num, long den = 1) {
  Rational r(num, den);
  r.canonicalize();
  return r;
}

std::string to_string(const Rational& r);

using VarId = int32_t;

/// Indeterminates of the symbolic layer. Base variables are the pair the
/// expression lives over: (x, y) in old coordinates, (u, w) in new ones.
/// Free atoms are opaque functions of the base variables; composed atoms are
/// the same symbols applied to inner expressions and only ever differentiate
/// by the chain rule.
enum class VarKind : uint8_t { BaseX, BaseY, Free, Composed };

class ScalarExpr;

struct VarInfo {
  VarKind kind = VarKind::BaseX;
  std::string name;  // function symbol, e.g. "f^u" or "g[0,1,1]"
  int arity = 0;     // 1 or 2 for Free/Composed
  int d0 = 0;        // derivative in first argument (or the only one)
  int d1 = 0;        // derivative in second argument
  std::vector<ScalarExpr> args;  // Composed only
  std::string display;
};

const VarInfo& var_info(VarId v);

/// Callbacks resolving atom symbols to concrete numeric functions.
class EvalEnv {
public:
  virtual ~EvalEnv() = default;
  virtual double fn1(const std::string& name, int d, double t) const = 0;
  virtual double fn2(const std::string& name, int dx, int dy, double s, double t) const = 0;
};

namespace detail {

struct VarPow {
  VarId v = 0;
  int32_t e = 0;
  friend bool operator==(const VarPow&, const VarPow&) = default;
};

struct Mono {
  std::vector<VarPow> vp;  // sorted by v ascending, exponents >= 1
  int totalDeg() const;
  friend bool operator==(const Mono&, const Mono&) = default;
};

// Graded lexicographic order; smaller VarId has higher lex priority.
int monoCompare(const Mono& a, const Mono& b);
Mono monoMul(const Mono& a, const Mono& b);
std::optional<Mono> monoDiv(const Mono& a, const Mono& b);

struct Term {
  Mono mono;
  Rational coeff;
  friend bool operator==(const Term& a, const Term& b) {
    return a.mono == b.mono && a.coeff == b.coeff;
  }
};

/// Sparse multivariate polynomial with exact rational coefficients.
/// Terms are kept sorted ascending by monoCompare with no zero coefficients,
/// so structural equality is mathematical equality.
class Poly {
public:
  Poly() = default;

  static Poly zero() { return Poly(); }
  static Poly one() { return constant(Rational(1)); }
  static Poly constant(const Rational& c);
  static Poly variable(VarId v, int e = 1);
  static Poly fromTerms(std::vector<Term> terms);  // sorts and combines

  bool isZero() const { return t_.empty(); }
  bool isConstant() const { return t_.empty() || (t_.size() == 1 && t_[0].mono.vp.empty()); }
  bool isOne() const;
  const std::vector<Term>& terms() const { return t_; }
  const Term& leading() const { return t_.back(); }
  int totalDegree() const;

  Poly operator-() const;
  friend Poly operator+(const Poly& a, const Poly& b);
  friend Poly operator-(const Poly& a, const Poly& b);
  friend Poly operator*(const Poly& a, const Poly& b);
  Poly mulConst(const Rational& c) const;
  Poly mulMono(const Mono& m) const;
  Poly pow(int e) const;  // e >= 0

  friend bool operator==(const Poly& a, const Poly& b) { return a.t_ == b.t_; }

  /// Formal partial derivative treating every indeterminate as independent.
  Poly partial(VarId v) const;

  std::vector<VarId> vars() const;
  VarId maxVar() const;  // -1 when constant
  bool usesVar(VarId v) const;

  int degreeIn(VarId v) const;
  /// Coefficients of v^k as polynomials free of v (univariate view).
  std::map<int, Poly> coefficientsIn(VarId v) const;
  static Poly fromCoefficientsIn(VarId v, const std::map<int, Poly>& coeffs);

  double evaluate(const std::function<double(VarId)>& value) const;

  std::string str() const;

private:
  std::vector<Term> t_;
};

/// Greatest common divisor, unit-normalized (leading coefficient 1).
Poly polyGcd(const Poly& a, const Poly& b);
/// Exact division; nullopt when b does not divide a.
std::optional<Poly> divideExact(const Poly& a, const Poly& b);

struct RatFun {
  Poly num;
  Poly den;  // invariant: nonzero, gcd(num,den)=1, leading coefficient 1
};

}  // namespace detail

/// Immutable symbolic expression: a canonical rational form num/den over the
/// atom alphabet. All arithmetic keeps the canonical-form invariant, so
/// normalize() is the identity and equality is decidable.
class ScalarExpr {
public:
  ScalarExpr();  // zero

  static ScalarExpr zero();
  static ScalarExpr one();
  static ScalarExpr integer(long v);
  static ScalarExpr rational(long num, long den);
  static ScalarExpr constant(const Rational& c);
  static ScalarExpr x();
  static ScalarExpr y();
  /// Opaque one-variable function symbol (a function of base x), d-th derivative.
  static ScalarExpr fn1(const std::string& name, int d = 0);
  /// Opaque two-variable function symbol with derivative multi-index.
  static ScalarExpr fn2(const std::string& name, int dx = 0, int dy = 0);
  static ScalarExpr composed1(const std::string& name, int d, const ScalarExpr& arg);
  static ScalarExpr composed2(const std::string& name, int dx, int dy, const ScalarExpr& argU,
                              const ScalarExpr& argW);
  static ScalarExpr fromVar(VarId v);

  friend ScalarExpr operator+(const ScalarExpr& a, const ScalarExpr& b);
  friend ScalarExpr operator-(const ScalarExpr& a, const ScalarExpr& b);
  friend ScalarExpr operator*(const ScalarExpr& a, const ScalarExpr& b);
  friend ScalarExpr operator/(const ScalarExpr& a, const ScalarExpr& b);
  ScalarExpr operator-() const;
  ScalarExpr& operator+=(const ScalarExpr& o);
  ScalarExpr& operator-=(const ScalarExpr& o);
  ScalarExpr& operator*=(const ScalarExpr& o);
  ScalarExpr pow(int e) const;

  enum class Var { X, Y };
  ScalarExpr diff(Var v) const;

  /// Ring homomorphism replacing the base variables; free atoms become
  /// composed atoms applied to the images (identity images are kept free).
  ScalarExpr substituteBase(const ScalarExpr& forX, const ScalarExpr& forY) const;
  /// The paper's [.]_{y=0} evaluation.
  ScalarExpr atY0() const;
  /// Taylor coefficients around y=0 up to the requested order (inclusive).
  /// Errors PoleAtOrigin when the denominator vanishes identically at y=0.
  std::vector<ScalarExpr> seriesY(int order) const;

  bool isZero() const;
  bool isOne() const;
  bool isConstant() const;
  std::optional<Rational> asConstant() const;
  bool equals(const ScalarExpr& o) const;
  /// Expressions are kept in canonical form at all times.
  ScalarExpr normalized() const { return *this; }

  bool dependsOnY() const;  // including through composed-atom arguments

  double eval(const EvalEnv& env, double x, double y, double divEps = 0.0) const;

  std::string str() const;

  const detail::Poly& num() const;
  const detail::Poly& den() const;

  std::vector<VarId> directVars() const;

  struct LinearSplit;
  /// Splits an expression that is linear in the target atoms. Throws
  /// logic_error if a numerator term contains a target nonlinearly or the
  /// denominator contains one.
  LinearSplit splitLinear(const std::function<bool(VarId)>& isTarget) const;

private:
  explicit ScalarExpr(std::shared_ptr<const detail::RatFun> r) : r_(std::move(r)) {}
  static ScalarExpr make(detail::Poly num, detail::Poly den);
  static ScalarExpr fromPoly(detail::Poly p);

  std::shared_ptr<const detail::RatFun> r_;
};

struct ScalarExpr::LinearSplit {
  std::map<VarId, ScalarExpr> parts;  // var -> multiplier
  ScalarExpr rest;                    // terms containing no target var
};

inline ScalarExpr operator*(long c, const ScalarExpr& e) { return ScalarExpr::integer(c) * e; }
inline ScalarExpr operator+(long c, const ScalarExpr& e) { return ScalarExpr::integer(c) + e; }
inline ScalarExpr operator-(long c, const ScalarExpr& e) { return ScalarExpr::integer(c) - e; }

/// Environment with no bindings; any atom evaluation raises UnboundAtom.
class NullEnv : public EvalEnv {
public:
  double fn1(const std::string& name, int, double) const override {
    fail(Errc::UnboundAtom, "no binding for '" + name + "'");
  }
  double fn2(const std::string& name, int, int, double, double) const override {
    fail(Errc::UnboundAtom, "no binding for '" + name + "'");
  }
};

}  // namespace z22
