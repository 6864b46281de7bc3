#include "z22/scalar_expr.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <deque>
#include <mutex>
#include <sstream>
#include <unordered_map>

namespace z22 {

std::string to_string(const Rational& r) { return r.get_str(); }

namespace detail {

int Mono::totalDeg() const {
  int s = 0;
  for (const auto& p : vp) s += p.e;
  return s;
}

int monoCompare(const Mono& a, const Mono& b) {
  int da = a.totalDeg(), db = b.totalDeg();
  if (da != db) return da < db ? -1 : 1;
  size_t i = 0, j = 0;
  while (i < a.vp.size() && j < b.vp.size()) {
    if (a.vp[i].v == b.vp[j].v) {
      if (a.vp[i].e != b.vp[j].e) return a.vp[i].e < b.vp[j].e ? -1 : 1;
      ++i;
      ++j;
    } else if (a.vp[i].v < b.vp[j].v) {
      return 1;  // positive power on an earlier variable wins
    } else {
      return -1;
    }
  }
  if (i < a.vp.size()) return 1;
  if (j < b.vp.size()) return -1;
  return 0;
}

Mono monoMul(const Mono& a, const Mono& b) {
  Mono out;
  out.vp.reserve(a.vp.size() + b.vp.size());
  size_t i = 0, j = 0;
  while (i < a.vp.size() && j < b.vp.size()) {
    if (a.vp[i].v == b.vp[j].v) {
      out.vp.push_back({a.vp[i].v, a.vp[i].e + b.vp[j].e});
      ++i;
      ++j;
    } else if (a.vp[i].v < b.vp[j].v) {
      out.vp.push_back(a.vp[i++]);
    } else {
      out.vp.push_back(b.vp[j++]);
    }
  }
  for (; i < a.vp.size(); ++i) out.vp.push_back(a.vp[i]);
  for (; j < b.vp.size(); ++j) out.vp.push_back(b.vp[j]);
  return out;
}

std::optional<Mono> monoDiv(const Mono& a, const Mono& b) {
  Mono out;
  size_t i = 0;
  for (const auto& q : b.vp) {
    while (i < a.vp.size() && a.vp[i].v < q.v) out.vp.push_back(a.vp[i++]);
    if (i == a.vp.size() || a.vp[i].v != q.v || a.vp[i].e < q.e) return std::nullopt;
    if (a.vp[i].e > q.e) out.vp.push_back({q.v, a.vp[i].e - q.e});
    ++i;
  }
  for (; i < a.vp.size(); ++i) out.vp.push_back(a.vp[i]);
  return out;
}

Poly Poly::constant(const Rational& c) {
  Poly p;
  if (c != 0) p.t_.push_back({Mono{}, c});
  return p;
}

Poly Poly::variable(VarId v, int e) {
  if (e == 0) return one();
  Poly p;
  p.t_.push_back({Mono{{VarPow{v, e}}}, Rational(1)});
  return p;
}

Poly Poly::fromTerms(std::vector<Term> terms) {
  std::sort(terms.begin(), terms.end(),
            [](const Term& a, const Term& b) { return monoCompare(a.mono, b.mono) < 0; });
  Poly p;
  for (auto& t : terms) {
    if (t.coeff == 0) continue;
    if (!p.t_.empty() && p.t_.back().mono == t.mono) {
      p.t_.back().coeff += t.coeff;
      if (p.t_.back().coeff == 0) p.t_.pop_back();
    } else {
      p.t_.push_back(std::move(t));
    }
  }
  return p;
}

bool Poly::isOne() const {
  return t_.size() == 1 && t_[0].mono.vp.empty() && t_[0].coeff == 1;
}

int Poly::totalDegree() const {
  int d = 0;
  for (const auto& t : t_) d = std::max(d, t.mono.totalDeg());
  return d;
}

Poly Poly::operator-() const {
  Poly p = *this;
  for (auto& t : p.t_) t.coeff = -t.coeff;
  return p;
}

Poly operator+(const Poly& a, const Poly& b) {
  Poly out;
  out.t_.reserve(a.t_.size() + b.t_.size());
  size_t i = 0, j = 0;
  while (i < a.t_.size() && j < b.t_.size()) {
    int c = monoCompare(a.t_[i].mono, b.t_[j].mono);
    if (c < 0) {
      out.t_.push_back(a.t_[i++]);
    } else if (c > 0) {
      out.t_.push_back(b.t_[j++]);
    } else {
      Rational s = a.t_[i].coeff + b.t_[j].coeff;
      if (s != 0) out.t_.push_back({a.t_[i].mono, s});
      ++i;
      ++j;
    }
  }
  for (; i < a.t_.size(); ++i) out.t_.push_back(a.t_[i]);
  for (; j < b.t_.size(); ++j) out.t_.push_back(b.t_[j]);
  return out;
}

Poly operator-(const Poly& a, const Poly& b) { return a + (-b); }

Poly operator*(const Poly& a, const Poly& b) {
  if (a.isZero() || b.isZero()) return Poly::zero();
  std::vector<Term> terms;
  terms.reserve(a.t_.size() * b.t_.size());
  for (const auto& ta : a.t_)
    for (const auto& tb : b.t_) terms.push_back({monoMul(ta.mono, tb.mono), ta.coeff * tb.coeff});
  return Poly::fromTerms(std::move(terms));
}

Poly Poly::mulConst(const Rational& c) const {
  if (c == 0) return zero();
  Poly p = *this;
  for (auto& t : p.t_) t.coeff *= c;
  return p;
}

Poly Poly::mulMono(const Mono& m) const {
  Poly p = *this;
  for (auto& t : p.t_) t.mono = monoMul(t.mono, m);
  return p;
}

Poly Poly::pow(int e) const {
  assert(e >= 0);
  Poly result = one();
  Poly base = *this;
  while (e > 0) {
    if (e & 1) result = result * base;
    base = (e >>= 1) ? base * base : base;
  }
  return result;
}

Poly Poly::partial(VarId v) const {
  std::vector<Term> terms;
  for (const auto& t : t_) {
    for (size_t k = 0; k < t.mono.vp.size(); ++k) {
      if (t.mono.vp[k].v != v) continue;
      Term d;
      d.coeff = t.coeff * t.mono.vp[k].e;
      d.mono = t.mono;
      if (d.mono.vp[k].e == 1) {
        d.mono.vp.erase(d.mono.vp.begin() + k);
      } else {
        d.mono.vp[k].e -= 1;
      }
      terms.push_back(std::move(d));
      break;
    }
  }
  return fromTerms(std::move(terms));
}

std::vector<VarId> Poly::vars() const {
  std::vector<VarId> vs;
  for (const auto& t : t_)
    for (const auto& p : t.mono.vp) vs.push_back(p.v);
  std::sort(vs.begin(), vs.end());
  vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
  return vs;
}

VarId Poly::maxVar() const {
  VarId m = -1;
  for (const auto& t : t_)
    if (!t.mono.vp.empty()) m = std::max(m, t.mono.vp.back().v);
  return m;
}

bool Poly::usesVar(VarId v) const {
  for (const auto& t : t_)
    for (const auto& p : t.mono.vp)
      if (p.v == v) return true;
  return false;
}

int Poly::degreeIn(VarId v) const {
  int d = 0;
  for (const auto& t : t_)
    for (const auto& p : t.mono.vp)
      if (p.v == v) d = std::max(d, int(p.e));
  return d;
}

std::map<int, Poly> Poly::coefficientsIn(VarId v) const {
  std::map<int, std::vector<Term>> buckets;
  for (const auto& t : t_) {
    int e = 0;
    Term rest = t;
    for (size_t k = 0; k < rest.mono.vp.size(); ++k) {
      if (rest.mono.vp[k].v == v) {
        e = rest.mono.vp[k].e;
        rest.mono.vp.erase(rest.mono.vp.begin() + k);
        break;
      }
    }
    buckets[e].push_back(std::move(rest));
  }
  std::map<int, Poly> out;
  for (auto& [e, terms] : buckets) out.emplace(e, fromTerms(std::move(terms)));
  return out;
}

Poly Poly::fromCoefficientsIn(VarId v, const std::map<int, Poly>& coeffs) {
  Poly out;
  for (const auto& [e, c] : coeffs) out = out + c * variable(v, e);
  return out;
}

double Poly::evaluate(const std::function<double(VarId)>& value) const {
  double sum = 0.0;
  for (const auto& t : t_) {
    double m = t.coeff.get_d();
    for (const auto& p : t.mono.vp) {
      double base = value(p.v);
      double acc = 1.0;
      for (int e = 0; e < p.e; ++e) acc *= base;
      m *= acc;
    }
    sum += m;
  }
  return sum;
}

std::string Poly::str() const {
  if (t_.empty()) return "0";
  std::string out;
  for (auto it = t_.rbegin(); it != t_.rend(); ++it) {
    const Term& t = *it;
    Rational c = t.coeff;
    bool neg = c < 0;
    if (neg) c = -c;
    if (it == t_.rbegin()) {
      if (neg) out += "-";
    } else {
      out += neg ? " - " : " + ";
    }
    std::string mono;
    for (const auto& p : t.mono.vp) {
      if (!mono.empty()) mono += "*";
      mono += var_info(p.v).display;
      if (p.e != 1) mono += "^" + std::to_string(p.e);
    }
    if (mono.empty()) {
      out += c.get_str();
    } else if (c == 1) {
      out += mono;
    } else {
      out += c.get_str() + "*" + mono;
    }
  }
  return out;
}

namespace {

// Common monomial factor across all terms.
Mono monomialContent(const Poly& p) {
  Mono m;
  bool first = true;
  for (const auto& t : p.terms()) {
    if (first) {
      m = t.mono;
      first = false;
      continue;
    }
    Mono next;
    size_t i = 0, j = 0;
    const auto& a = m.vp;
    const auto& b = t.mono.vp;
    while (i < a.size() && j < b.size()) {
      if (a[i].v == b[j].v) {
        next.vp.push_back({a[i].v, std::min(a[i].e, b[j].e)});
        ++i;
        ++j;
      } else if (a[i].v < b[j].v) {
        ++i;
      } else {
        ++j;
      }
    }
    m = std::move(next);
    if (m.vp.empty()) break;
  }
  return m;
}

Poly stripMono(const Poly& p, const Mono& m) {
  if (m.vp.empty()) return p;
  std::vector<Term> terms;
  terms.reserve(p.terms().size());
  for (const auto& t : p.terms()) {
    auto d = monoDiv(t.mono, m);
    assert(d);
    terms.push_back({*d, t.coeff});
  }
  return Poly::fromTerms(std::move(terms));
}

Poly unitNormal(const Poly& p) {
  if (p.isZero()) return p;
  return p.mulConst(1 / p.leading().coeff);
}

Poly gcdList(const std::vector<Poly>& ps);

// Pseudo-remainder of a by b in the variable v.
Poly prem(const Poly& a, const Poly& b, VarId v) {
  int db = b.degreeIn(v);
  auto bc = b.coefficientsIn(v);
  const Poly& lcB = bc.rbegin()->second;
  Poly r = a;
  int guard = 0;
  while (!r.isZero()) {
    int dr = r.degreeIn(v);
    if (dr < db || (dr == 0 && db == 0)) break;
    if (dr == 0 && !r.usesVar(v)) break;
    auto rc = r.coefficientsIn(v);
    auto top = rc.rbegin();
    if (top->first < db) break;
    const Poly& lcR = top->second;
    r = r * lcB - b * (lcR * Poly::variable(v, top->first - db));
    if (++guard > 10000) fail(Errc::InvalidInput, "pseudo-division did not terminate");
  }
  return r;
}

Poly primitivePart(const Poly& p, VarId v, Poly* contentOut = nullptr) {
  auto coeffs = p.coefficientsIn(v);
  std::vector<Poly> cs;
  cs.reserve(coeffs.size());
  for (auto& [e, c] : coeffs) cs.push_back(c);
  Poly cont = gcdList(cs);
  if (contentOut) *contentOut = cont;
  if (cont.isOne()) return p;
  auto q = divideExact(p, cont);
  assert(q);
  return *q;
}

Poly gcdImpl(const Poly& a, const Poly& b) {
  if (a.isZero()) return unitNormal(b);
  if (b.isZero()) return unitNormal(a);
  if (a.isConstant() || b.isConstant()) return Poly::one();
  if (a == b) return unitNormal(a);

  // Strip monomial content first; cheap and very common.
  Mono ma = monomialContent(a);
  Mono mb = monomialContent(b);
  Mono mg;
  {
    size_t i = 0, j = 0;
    while (i < ma.vp.size() && j < mb.vp.size()) {
      if (ma.vp[i].v == mb.vp[j].v) {
        mg.vp.push_back({ma.vp[i].v, std::min(ma.vp[i].e, mb.vp[j].e)});
        ++i;
        ++j;
      } else if (ma.vp[i].v < mb.vp[j].v) {
        ++i;
      } else {
        ++j;
      }
    }
  }
  Poly a1 = stripMono(a, ma);
  Poly b1 = stripMono(b, mb);
  Poly monoG = Poly::one().mulMono(mg);

  if (a1.isConstant() || b1.isConstant()) return unitNormal(monoG);

  // Fast paths: one dividing the other.
  if (auto q = divideExact(a1, b1)) {
    (void)q;
    return unitNormal(monoG * b1);
  }
  if (auto q = divideExact(b1, a1)) {
    (void)q;
    return unitNormal(monoG * a1);
  }

  VarId v = std::max(a1.maxVar(), b1.maxVar());
  assert(v >= 0);

  Poly contA, contB;
  Poly ppA = primitivePart(a1, v, &contA);
  Poly ppB = primitivePart(b1, v, &contB);
  Poly cont = gcdImpl(contA, contB);

  // Primitive PRS.
  Poly p = ppA, q = ppB;
  if (p.degreeIn(v) < q.degreeIn(v)) std::swap(p, q);
  while (!q.isZero() && q.usesVar(v)) {
    Poly r = prem(p, q, v);
    p = q;
    q = r.isZero() ? Poly::zero() : primitivePart(r, v);
  }
  // A remainder free of v but nonzero means the inputs are coprime in v.
  Poly pp = q.isZero() ? (p.usesVar(v) ? primitivePart(p, v) : Poly::one()) : Poly::one();
  return unitNormal(monoG * cont * pp);
}

Poly gcdList(const std::vector<Poly>& ps) {
  Poly g = Poly::zero();
  for (const auto& p : ps) {
    g = gcdImpl(g, p);
    if (g.isOne()) break;
  }
  if (g.isZero()) return Poly::one();
  return g;
}

}  // namespace

Poly polyGcd(const Poly& a, const Poly& b) { return gcdImpl(a, b); }

std::optional<Poly> divideExact(const Poly& a, const Poly& b) {
  if (b.isZero()) return std::nullopt;
  if (a.isZero()) return Poly::zero();
  if (b.isOne()) return a;
  if (b.isConstant()) return a.mulConst(1 / b.leading().coeff);
  Poly rem = a;
  std::vector<Term> qterms;
  int guard = 0;
  while (!rem.isZero()) {
    const Term& lr = rem.leading();
    const Term& lb = b.leading();
    auto m = monoDiv(lr.mono, lb.mono);
    if (!m) return std::nullopt;
    Term qt{*m, lr.coeff / lb.coeff};
    qterms.push_back(qt);
    Poly sub = b.mulConst(qt.coeff).mulMono(qt.mono);
    rem = rem - sub;
    if (++guard > 200000) return std::nullopt;
  }
  return Poly::fromTerms(std::move(qterms));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Variable interning
// ---------------------------------------------------------------------------

namespace {

std::string derivedDisplay(const std::string& name, int arity, int d0, int d1) {
  std::string s = name;
  if (arity == 1) {
    if (d0 > 0 && d0 <= 3) {
      s += std::string(d0, '\'');
    } else if (d0 > 3) {
      s += "^(" + std::to_string(d0) + ")";
    }
  } else {
    if (d0 + d1 > 0) {
      s += "_";
      s += std::string(d0, 'x');
      s += std::string(d1, 'y');
    }
  }
  return s;
}

class VarTable {
public:
  static VarTable& instance() {
    static VarTable t;
    return t;
  }

  VarId baseX() { return 0; }
  VarId baseY() { return 1; }

  VarId intern(VarInfo info, const std::string& key) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = byKey_.find(key);
    if (it != byKey_.end()) return it->second;
    VarId id = VarId(infos_.size());
    infos_.push_back(std::move(info));
    byKey_.emplace(key, id);
    return id;
  }

  const VarInfo& info(VarId v) const {
    std::lock_guard<std::mutex> lock(mu_);
    return infos_.at(size_t(v));
  }

private:
  VarTable() {
    VarInfo x;
    x.kind = VarKind::BaseX;
    x.display = "x";
    infos_.push_back(x);
    byKey_.emplace("@x", 0);
    VarInfo y;
    y.kind = VarKind::BaseY;
    y.display = "y";
    infos_.push_back(y);
    byKey_.emplace("@y", 1);
  }

  mutable std::mutex mu_;
  std::deque<VarInfo> infos_;
  std::unordered_map<std::string, VarId> byKey_;
};

}  // namespace

const VarInfo& var_info(VarId v) { return VarTable::instance().info(v); }

// ---------------------------------------------------------------------------
// ScalarExpr
// ---------------------------------------------------------------------------

using detail::Poly;
using detail::RatFun;

namespace {

std::shared_ptr<const RatFun> makeShared(Poly num, Poly den) {
  auto r = std::make_shared<RatFun>();
  r->num = std::move(num);
  r->den = std::move(den);
  return r;
}

const std::shared_ptr<const RatFun>& zeroRat() {
  static const std::shared_ptr<const RatFun> z = makeShared(Poly::zero(), Poly::one());
  return z;
}

}  // namespace

ScalarExpr::ScalarExpr() : r_(zeroRat()) {}

ScalarExpr ScalarExpr::make(Poly num, Poly den) {
  if (den.isZero()) fail(Errc::ZeroDenominator, "division by zero expression");
  if (num.isZero()) return ScalarExpr();
  if (!den.isOne()) {
    Poly g = detail::polyGcd(num, den);
    if (!g.isOne()) {
      num = *detail::divideExact(num, g);
      den = *detail::divideExact(den, g);
    }
    Rational lc = den.leading().coeff;
    if (lc != 1) {
      num = num.mulConst(1 / lc);
      den = den.mulConst(1 / lc);
    }
  }
  return ScalarExpr(makeShared(std::move(num), std::move(den)));
}

ScalarExpr ScalarExpr::fromPoly(Poly p) { return ScalarExpr(makeShared(std::move(p), Poly::one())); }

ScalarExpr ScalarExpr::zero() { return ScalarExpr(); }
ScalarExpr ScalarExpr::one() { return integer(1); }
ScalarExpr ScalarExpr::integer(long v) { return constant(Rational(v)); }
ScalarExpr ScalarExpr::rational(long num, long den) { return constant(rat(num, den)); }

ScalarExpr ScalarExpr::constant(const Rational& c) {
  if (c == 0) return ScalarExpr();
  return fromPoly(Poly::constant(c));
}

ScalarExpr ScalarExpr::x() { return fromVar(VarTable::instance().baseX()); }
ScalarExpr ScalarExpr::y() { return fromVar(VarTable::instance().baseY()); }

ScalarExpr ScalarExpr::fn1(const std::string& name, int d) {
  VarInfo info;
  info.kind = VarKind::Free;
  info.name = name;
  info.arity = 1;
  info.d0 = d;
  info.display = derivedDisplay(name, 1, d, 0);
  std::string key = "f1|" + name + "|" + std::to_string(d);
  return fromVar(VarTable::instance().intern(std::move(info), key));
}

ScalarExpr ScalarExpr::fn2(const std::string& name, int dx, int dy) {
  VarInfo info;
  info.kind = VarKind::Free;
  info.name = name;
  info.arity = 2;
  info.d0 = dx;
  info.d1 = dy;
  info.display = derivedDisplay(name, 2, dx, dy);
  std::string key = "f2|" + name + "|" + std::to_string(dx) + "," + std::to_string(dy);
  return fromVar(VarTable::instance().intern(std::move(info), key));
}

ScalarExpr ScalarExpr::composed1(const std::string& name, int d, const ScalarExpr& arg) {
  VarInfo info;
  info.kind = VarKind::Composed;
  info.name = name;
  info.arity = 1;
  info.d0 = d;
  info.args = {arg};
  info.display = derivedDisplay(name, 1, d, 0) + "(" + arg.str() + ")";
  std::string key = "c1|" + name + "|" + std::to_string(d) + "|" + arg.str();
  return fromVar(VarTable::instance().intern(std::move(info), key));
}

ScalarExpr ScalarExpr::composed2(const std::string& name, int dx, int dy, const ScalarExpr& argU,
                                 const ScalarExpr& argW) {
  VarInfo info;
  info.kind = VarKind::Composed;
  info.name = name;
  info.arity = 2;
  info.d0 = dx;
  info.d1 = dy;
  info.args = {argU, argW};
  info.display =
      derivedDisplay(name, 2, dx, dy) + "(" + argU.str() + "," + argW.str() + ")";
  std::string key = "c2|" + name + "|" + std::to_string(dx) + "," + std::to_string(dy) + "|" +
                    argU.str() + "|" + argW.str();
  return fromVar(VarTable::instance().intern(std::move(info), key));
}

ScalarExpr ScalarExpr::fromVar(VarId v) { return fromPoly(Poly::variable(v)); }

const Poly& ScalarExpr::num() const { return r_->num; }
const Poly& ScalarExpr::den() const { return r_->den; }

bool ScalarExpr::isZero() const { return r_->num.isZero(); }
bool ScalarExpr::isOne() const { return r_->num.isOne() && r_->den.isOne(); }
bool ScalarExpr::isConstant() const { return r_->num.isConstant() && r_->den.isConstant(); }

std::optional<Rational> ScalarExpr::asConstant() const {
  if (!isConstant()) return std::nullopt;
  if (isZero()) return Rational(0);
  return r_->num.leading().coeff / r_->den.leading().coeff;
}

ScalarExpr operator+(const ScalarExpr& a, const ScalarExpr& b) {
  if (a.isZero()) return b;
  if (b.isZero()) return a;
  if (a.r_->den == b.r_->den)
    return ScalarExpr::make(a.r_->num + b.r_->num, a.r_->den);
  return ScalarExpr::make(a.r_->num * b.r_->den + b.r_->num * a.r_->den, a.r_->den * b.r_->den);
}

ScalarExpr operator-(const ScalarExpr& a, const ScalarExpr& b) { return a + (-b); }

ScalarExpr ScalarExpr::operator-() const {
  if (isZero()) return *this;
  return ScalarExpr(makeShared(-r_->num, r_->den));
}

ScalarExpr operator*(const ScalarExpr& a, const ScalarExpr& b) {
  if (a.isZero() || b.isZero()) return ScalarExpr::zero();
  if (a.isOne()) return b;
  if (b.isOne()) return a;
  // Cross-cancel: gcd(n1,d2) and gcd(n2,d1); factors stay pairwise coprime.
  Poly n1 = a.r_->num, d1 = a.r_->den, n2 = b.r_->num, d2 = b.r_->den;
  if (!d2.isOne()) {
    Poly g = detail::polyGcd(n1, d2);
    if (!g.isOne()) {
      n1 = *detail::divideExact(n1, g);
      d2 = *detail::divideExact(d2, g);
    }
  }
  if (!d1.isOne()) {
    Poly g = detail::polyGcd(n2, d1);
    if (!g.isOne()) {
      n2 = *detail::divideExact(n2, g);
      d1 = *detail::divideExact(d1, g);
    }
  }
  Poly num = n1 * n2;
  Poly den = d1 * d2;
  if (den.isOne()) return ScalarExpr(makeShared(std::move(num), std::move(den)));
  Rational lc = den.leading().coeff;
  if (lc != 1) {
    num = num.mulConst(1 / lc);
    den = den.mulConst(1 / lc);
  }
  return ScalarExpr(makeShared(std::move(num), std::move(den)));
}

ScalarExpr operator/(const ScalarExpr& a, const ScalarExpr& b) {
  if (b.isZero()) fail(Errc::ZeroDenominator, "division by zero expression");
  if (a.isZero()) return a;
  ScalarExpr binv = ScalarExpr::make(b.r_->den, b.r_->num);
  return a * binv;
}

ScalarExpr& ScalarExpr::operator+=(const ScalarExpr& o) { return *this = *this + o; }
ScalarExpr& ScalarExpr::operator-=(const ScalarExpr& o) { return *this = *this - o; }
ScalarExpr& ScalarExpr::operator*=(const ScalarExpr& o) { return *this = *this * o; }

ScalarExpr ScalarExpr::pow(int e) const {
  if (e == 0) return one();
  if (e < 0) {
    if (isZero()) fail(Errc::ZeroDenominator, "0^negative");
    return make(r_->den, r_->num).pow(-e);
  }
  return make(r_->num.pow(e), r_->den.pow(e));
}

bool ScalarExpr::equals(const ScalarExpr& o) const {
  if (r_ == o.r_) return true;
  if (r_->num == o.r_->num && r_->den == o.r_->den) return true;
  // Cross-multiplication: sound regardless of gcd canonicalization.
  return (r_->num * o.r_->den - o.r_->num * r_->den).isZero();
}

namespace {

ScalarExpr varDerivative(VarId v, ScalarExpr::Var wrt) {
  const VarInfo& info = var_info(v);
  switch (info.kind) {
    case VarKind::BaseX:
      return wrt == ScalarExpr::Var::X ? ScalarExpr::one() : ScalarExpr::zero();
    case VarKind::BaseY:
      return wrt == ScalarExpr::Var::Y ? ScalarExpr::one() : ScalarExpr::zero();
    case VarKind::Free:
      if (info.arity == 1) {
        return wrt == ScalarExpr::Var::X ? ScalarExpr::fn1(info.name, info.d0 + 1)
                                         : ScalarExpr::zero();
      }
      return wrt == ScalarExpr::Var::X ? ScalarExpr::fn2(info.name, info.d0 + 1, info.d1)
                                       : ScalarExpr::fn2(info.name, info.d0, info.d1 + 1);
    case VarKind::Composed: {
      // Chain rule through the inner arguments.
      ScalarExpr out;
      if (info.arity == 1) {
        out = ScalarExpr::composed1(info.name, info.d0 + 1, info.args[0]) * info.args[0].diff(wrt);
      } else {
        out = ScalarExpr::composed2(info.name, info.d0 + 1, info.d1, info.args[0], info.args[1]) *
                  info.args[0].diff(wrt) +
              ScalarExpr::composed2(info.name, info.d0, info.d1 + 1, info.args[0], info.args[1]) *
                  info.args[1].diff(wrt);
      }
      return out;
    }
  }
  return ScalarExpr::zero();
}

}  // namespace

ScalarExpr ScalarExpr::diff(Var wrt) const {
  // d(n/d) = (n' d - n d') / d^2 where ' differentiates polynomials through
  // the atom alphabet by the chain rule.
  auto diffP = [&](const Poly& p) {
    ScalarExpr out;
    for (VarId v : p.vars()) {
      ScalarExpr dv = varDerivative(v, wrt);
      if (dv.isZero()) continue;
      Poly part = p.partial(v);
      if (part.isZero()) continue;
      out += dv * fromPoly(std::move(part));
    }
    return out;
  };
  ScalarExpr dn = diffP(r_->num);
  if (r_->den.isOne()) return dn;
  ScalarExpr dd = diffP(r_->den);
  ScalarExpr n = fromPoly(r_->num), d = fromPoly(r_->den);
  return (dn * d - n * dd) / (d * d);
}

ScalarExpr ScalarExpr::substituteBase(const ScalarExpr& forX, const ScalarExpr& forY) const {
  bool idX = forX.equals(x());
  bool idY = forY.equals(y());
  if (idX && idY) return *this;

  std::map<VarId, ScalarExpr> memo;
  std::function<ScalarExpr(VarId)> image = [&](VarId v) -> ScalarExpr {
    auto it = memo.find(v);
    if (it != memo.end()) return it->second;
    const VarInfo& info = var_info(v);
    ScalarExpr img;
    switch (info.kind) {
      case VarKind::BaseX:
        img = forX;
        break;
      case VarKind::BaseY:
        img = forY;
        break;
      case VarKind::Free:
        if (info.arity == 1) {
          img = idX ? fromVar(v) : composed1(info.name, info.d0, forX);
        } else {
          img = (idX && idY) ? fromVar(v) : composed2(info.name, info.d0, info.d1, forX, forY);
        }
        break;
      case VarKind::Composed: {
        std::vector<ScalarExpr> newArgs;
        newArgs.reserve(info.args.size());
        bool changed = false;
        for (const auto& a : info.args) {
          ScalarExpr na = a.substituteBase(forX, forY);
          if (!na.equals(a)) changed = true;
          newArgs.push_back(std::move(na));
        }
        if (!changed) {
          img = fromVar(v);
        } else if (info.arity == 1) {
          img = composed1(info.name, info.d0, newArgs[0]);
        } else {
          img = composed2(info.name, info.d0, info.d1, newArgs[0], newArgs[1]);
        }
        break;
      }
    }
    memo.emplace(v, img);
    return img;
  };

  auto substP = [&](const Poly& p) {
    ScalarExpr out;
    for (const auto& t : p.terms()) {
      ScalarExpr term = constant(t.coeff);
      for (const auto& vp : t.mono.vp) term *= image(vp.v).pow(vp.e);
      out += term;
    }
    return out;
  };

  ScalarExpr numS = substP(r_->num);
  if (r_->den.isOne()) return numS;
  ScalarExpr denS = substP(r_->den);
  return numS / denS;  // throws ZeroDenominator if the denominator collapses
}

ScalarExpr ScalarExpr::atY0() const { return substituteBase(x(), zero()); }

std::vector<ScalarExpr> ScalarExpr::seriesY(int order) const {
  std::vector<ScalarExpr> coeffs;
  coeffs.reserve(size_t(order) + 1);
  ScalarExpr cur = *this;
  Rational factorial(1);
  for (int r = 0; r <= order; ++r) {
    if (r > 0) factorial *= r;
    ScalarExpr c;
    try {
      c = cur.atY0();
    } catch (const Error& e) {
      if (e.code() == Errc::ZeroDenominator)
        fail(Errc::PoleAtOrigin, "denominator vanishes identically at y=0");
      throw;
    }
    coeffs.push_back(c * constant(1 / factorial));
    if (r < order) cur = cur.diff(Var::Y);
  }
  return coeffs;
}

bool ScalarExpr::dependsOnY() const {
  std::function<bool(const Poly&)> polyUsesY = [&](const Poly& p) -> bool {
    for (VarId v : p.vars()) {
      const VarInfo& info = var_info(v);
      if (info.kind == VarKind::BaseY) return true;
      if (info.kind == VarKind::Free && info.arity == 2) return true;
      if (info.kind == VarKind::Composed) {
        for (const auto& a : info.args)
          if (a.dependsOnY()) return true;
      }
    }
    return false;
  };
  return polyUsesY(r_->num) || polyUsesY(r_->den);
}

double ScalarExpr::eval(const EvalEnv& env, double xv, double yv, double divEps) const {
  std::function<double(VarId)> value = [&](VarId v) -> double {
    const VarInfo& info = var_info(v);
    switch (info.kind) {
      case VarKind::BaseX:
        return xv;
      case VarKind::BaseY:
        return yv;
      case VarKind::Free:
        return info.arity == 1 ? env.fn1(info.name, info.d0, xv)
                               : env.fn2(info.name, info.d0, info.d1, xv, yv);
      case VarKind::Composed: {
        double a0 = info.args[0].eval(env, xv, yv, divEps);
        if (info.arity == 1) return env.fn1(info.name, info.d0, a0);
        double a1 = info.args[1].eval(env, xv, yv, divEps);
        return env.fn2(info.name, info.d0, info.d1, a0, a1);
      }
    }
    return 0.0;
  };
  double n = r_->num.evaluate(value);
  if (r_->den.isOne()) return n;
  double d = r_->den.evaluate(value);
  if (std::abs(d) <= divEps || d == 0.0)
    fail(Errc::DivisionNearZero, "denominator magnitude " + std::to_string(d));
  return n / d;
}

std::string ScalarExpr::str() const {
  if (r_->den.isOne()) return r_->num.str();
  return "(" + r_->num.str() + ")/(" + r_->den.str() + ")";
}

std::vector<VarId> ScalarExpr::directVars() const {
  std::vector<VarId> vs = r_->num.vars();
  for (VarId v : r_->den.vars()) vs.push_back(v);
  std::sort(vs.begin(), vs.end());
  vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
  return vs;
}

ScalarExpr::LinearSplit ScalarExpr::splitLinear(const std::function<bool(VarId)>& isTarget) const {
  for (VarId v : r_->den.vars())
    if (isTarget(v)) throw std::logic_error("splitLinear: target atom in denominator");

  std::map<VarId, std::vector<detail::Term>> buckets;
  std::vector<detail::Term> restTerms;
  for (const auto& t : r_->num.terms()) {
    VarId target = -1;
    int exp = 0;
    for (const auto& vp : t.mono.vp) {
      if (!isTarget(vp.v)) continue;
      if (target != -1) throw std::logic_error("splitLinear: two target atoms in one term");
      target = vp.v;
      exp = vp.e;
    }
    if (target == -1) {
      restTerms.push_back(t);
      continue;
    }
    if (exp != 1) throw std::logic_error("splitLinear: target atom appears nonlinearly");
    detail::Term stripped = t;
    for (size_t k = 0; k < stripped.mono.vp.size(); ++k) {
      if (stripped.mono.vp[k].v == target) {
        stripped.mono.vp.erase(stripped.mono.vp.begin() + k);
        break;
      }
    }
    buckets[target].push_back(std::move(stripped));
  }

  LinearSplit out;
  for (auto& [v, terms] : buckets)
    out.parts.emplace(v, make(Poly::fromTerms(std::move(terms)), r_->den));
  out.rest = make(Poly::fromTerms(std::move(restTerms)), r_->den);
  return out;
}

}  // namespace z22
