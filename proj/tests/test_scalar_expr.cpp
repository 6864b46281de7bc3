#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "z22/scalar_expr.hpp"

using namespace z22;
using Var = ScalarExpr::Var;

namespace {

// Concrete polynomial functions with analytic derivatives; the test-side
// binding oracle, independent of the numeric module.
struct PolyFn {
  // c[i][j] multiplies x^i y^j (one-variable functions use only j = 0).
  std::vector<std::vector<double>> c;

  double eval(int dx, int dy, double x, double y) const {
    double sum = 0.0;
    for (size_t i = 0; i < c.size(); ++i) {
      for (size_t j = 0; j < c[i].size(); ++j) {
        if (int(i) < dx || int(j) < dy || c[i][j] == 0.0) continue;
        double coef = c[i][j];
        for (int k = 0; k < dx; ++k) coef *= double(i - k);
        for (int k = 0; k < dy; ++k) coef *= double(j - k);
        sum += coef * std::pow(x, double(i) - dx) * std::pow(y, double(j) - dy);
      }
    }
    return sum;
  }
};

struct TestEnv : EvalEnv {
  std::map<std::string, PolyFn> fns;

  double fn1(const std::string& name, int d, double t) const override {
    auto it = fns.find(name);
    if (it == fns.end()) fail(Errc::UnboundAtom, name);
    return it->second.eval(d, 0, t, 0.0);
  }
  double fn2(const std::string& name, int dx, int dy, double s, double t) const override {
    auto it = fns.find(name);
    if (it == fns.end()) fail(Errc::UnboundAtom, name);
    return it->second.eval(dx, dy, s, t);
  }
};

TestEnv transformEnv() {
  TestEnv env;
  env.fns["f^u"] = PolyFn{{{0.0, 0.2}, {1.0, 0.1}}};          // x + 0.2y + 0.1xy
  env.fns["f^v"] = PolyFn{{{1.5, 0.4}, {0.25}}};              // 1.5 + 0.4y + 0.25x
  env.fns["f^zeta"] = PolyFn{{{2.0, -0.3}, {0.5}}};           // 2 - 0.3y + 0.5x
  env.fns["f^theta"] = PolyFn{{{1.25, 0.2}, {-0.125}}};       // 1.25 + 0.2y - 0.125x
  env.fns["g^u"] = PolyFn{{{0.5}, {0.75, 0.3}}};              // 0.5 + 0.75x + 0.3xy
  env.fns["g^v"] = PolyFn{{{0.25, 0.6}, {-0.5}}};             // 0.25 + 0.6y - 0.5x
  env.fns["g^zeta"] = PolyFn{{{0.4}, {0.2}}};                 // 0.4 + 0.2x
  env.fns["g^theta"] = PolyFn{{{-0.3, 0.1}, {0.6}}};          // -0.3 + 0.1y + 0.6x
  return env;
}

ScalarExpr detDExpr() {
  return ScalarExpr::fn2("f^zeta") * ScalarExpr::fn2("f^theta") -
         ScalarExpr::y() * ScalarExpr::fn2("g^zeta") * ScalarExpr::fn2("g^theta");
}

ScalarExpr jbExpr() {
  ScalarExpr fux = ScalarExpr::fn2("f^u", 1, 0);
  ScalarExpr fuy = ScalarExpr::fn2("f^u", 0, 1);
  ScalarExpr fv = ScalarExpr::fn2("f^v");
  ScalarExpr fvx = ScalarExpr::fn2("f^v", 1, 0);
  ScalarExpr fvy = ScalarExpr::fn2("f^v", 0, 1);
  return fux * fv + 2 * ScalarExpr::y() * (fux * fvy - fuy * fvx);
}

// Deterministic little generator for random expression trees.
struct Rng {
  uint64_t s;
  uint64_t next() {
    s += 0x9e3779b97f4a7c15ULL;
    uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  int range(int n) { return int(next() % uint64_t(n)); }
};

ScalarExpr randomExpr(Rng& rng, int depth) {
  if (depth == 0) {
    switch (rng.range(6)) {
      case 0: return ScalarExpr::x();
      case 1: return ScalarExpr::y();
      case 2: return ScalarExpr::fn2("f^u");
      case 3: return ScalarExpr::fn2("f^v");
      case 4: return ScalarExpr::composed1("g[0,0,0]", 0, ScalarExpr::fn2("f^u"));
      default: return ScalarExpr::integer(rng.range(5) + 1);
    }
  }
  ScalarExpr a = randomExpr(rng, depth - 1);
  ScalarExpr b = randomExpr(rng, depth - 1);
  switch (rng.range(4)) {
    case 0: return a + b;
    case 1: return a - b;
    case 2: return a * b;
    default:
      // Keep denominators structurally nonzero: divide by 2 + b^2.
      return a / (ScalarExpr::integer(2) + b * b);
  }
}

}  // namespace

TEST_CASE("formal derivatives of atoms") {
  CHECK(ScalarExpr::fn2("f^v").diff(Var::Y).equals(ScalarExpr::fn2("f^v", 0, 1)));
  CHECK(ScalarExpr::fn2("f^u", 1, 0).diff(Var::X).equals(ScalarExpr::fn2("f^u", 2, 0)));
  CHECK(ScalarExpr::fn1("g[0,1,1]").diff(Var::Y).isZero());

  // Chain rule on a composed atom.
  ScalarExpr g = ScalarExpr::composed1("g[0,0,0]", 0, ScalarExpr::fn2("f^u"));
  ScalarExpr expect =
      ScalarExpr::composed1("g[0,0,0]", 1, ScalarExpr::fn2("f^u")) * ScalarExpr::fn2("f^u", 1, 0);
  CHECK(g.diff(Var::X).equals(expect));
}

TEST_CASE("quotient rule against finite differences") {
  ScalarExpr e = ScalarExpr::one() / detDExpr();
  ScalarExpr de = e.diff(Var::X);
  TestEnv env = transformEnv();
  const double h = 1e-5;
  for (double x : {-0.7, 0.0, 0.9}) {
    for (double y : {0.1, 0.8}) {
      double fd = (e.eval(env, x + h, y) - e.eval(env, x - h, y)) / (2 * h);
      double sym = de.eval(env, x, y);
      CHECK(std::abs(sym - fd) <= 1e-6 * std::max(1.0, std::abs(sym)));
    }
  }
}

TEST_CASE("derivative written out by the quotient rule matches") {
  ScalarExpr d = detDExpr();
  ScalarExpr e = ScalarExpr::one() / d;
  ScalarExpr expect = -(d.diff(Var::X)) / (d * d);
  CHECK(e.diff(Var::X).equals(expect));
}

TEST_CASE("normalization: cancellations and expansions") {
  ScalarExpr fux = ScalarExpr::fn2("f^u", 1, 0);
  ScalarExpr fv = ScalarExpr::fn2("f^v");
  CHECK((fux * fv - fv * fux).isZero());

  ScalarExpr a = ScalarExpr::fn1("a"), b = ScalarExpr::fn1("b");
  ScalarExpr e = (a + b) * (a + b) - a * a - 2 * (a * b) - b * b;
  CHECK(e.isZero());

  // J^B built from the bosonic block determinant (z^2 already folded to y)
  // has the same normal form as the written-out expression.
  ScalarExpr fuy = ScalarExpr::fn2("f^u", 0, 1);
  ScalarExpr fvx = ScalarExpr::fn2("f^v", 1, 0);
  ScalarExpr fvy = ScalarExpr::fn2("f^v", 0, 1);
  ScalarExpr y = ScalarExpr::y();
  ScalarExpr blockDet = fux * (fv + 2 * y * fvy) - 2 * y * fuy * fvx;
  CHECK(blockDet.equals(jbExpr()));
}

TEST_CASE("normalize is idempotent and equality is symmetric") {
  ScalarExpr d = detDExpr();
  ScalarExpr e = (jbExpr() * d) / (d * d);  // common factor det D cancels
  CHECK(e.normalized().equals(e));
  CHECK(e.equals(jbExpr() / d));
  CHECK((jbExpr() / d).equals(e));
}

TEST_CASE("rational arithmetic is exact") {
  ScalarExpr e = ScalarExpr::rational(1, 3) + ScalarExpr::rational(2, 5);
  CHECK(e.equals(ScalarExpr::rational(11, 15)));
  CHECK(e.asConstant().has_value());
  CHECK(*e.asConstant() == rat(11, 15));
}

TEST_CASE("equality of reorderings and the worked example's G") {
  CHECK((ScalarExpr::x() * ScalarExpr::y()).equals(ScalarExpr::y() * ScalarExpr::x()));

  // Transform u=x, v=(1+y)z+xi eta, zeta=xi, theta=eta: G vanishes.
  ScalarExpr zero = ScalarExpr::zero();
  ScalarExpr one = ScalarExpr::one();
  ScalarExpr y = ScalarExpr::y();
  ScalarExpr fU = ScalarExpr::x(), gU = zero, fV = one + y, gV = one;
  ScalarExpr fZ = one, gZ = zero, fT = one, gT = zero;
  ScalarExpr detD = fZ * fT - y * gZ * gT;
  ScalarExpr jx = ((fV + 2 * y * fV.diff(Var::Y)) * gU - 2 * fU.diff(Var::Y) * gV) / detD;
  ScalarExpr jy = (2 * (fU.diff(Var::X) * gV - y * fV.diff(Var::X) * gU)) / detD;
  ScalarExpr G = jx.diff(Var::X) + jy.diff(Var::Y);
  CHECK(G.isZero());
  CHECK(detD.equals(one));
}

TEST_CASE("series in y") {
  ScalarExpr geom = ScalarExpr::one() / (ScalarExpr::one() + ScalarExpr::y());
  auto c = geom.seriesY(2);
  REQUIRE(c.size() == 3);
  CHECK(c[0].equals(ScalarExpr::one()));
  CHECK(c[1].equals(ScalarExpr::integer(-1)));
  CHECK(c[2].equals(ScalarExpr::one()));

  auto fu = ScalarExpr::fn2("f^u").seriesY(1);
  CHECK(fu[0].equals(ScalarExpr::fn2("f^u").atY0()));
  CHECK(fu[1].equals(ScalarExpr::fn2("f^u", 0, 1).atY0()));

  ScalarExpr ratio = (ScalarExpr::one() + 3 * ScalarExpr::y()) /
                     (ScalarExpr::one() + ScalarExpr::y());
  CHECK(ratio.seriesY(0)[0].equals(ScalarExpr::one()));

  CHECK_THROWS_AS((void)(ScalarExpr::one() / ScalarExpr::y()).seriesY(1), Error);
}

TEST_CASE("series truncation error scales as y^{n+1}") {
  ScalarExpr e = (ScalarExpr::one() + 3 * ScalarExpr::y()) /
                 (ScalarExpr::one() + ScalarExpr::y() + ScalarExpr::y() * ScalarExpr::y());
  const int n = 3;
  auto c = e.seriesY(n);
  NullEnv env;
  auto truncated = [&](double y) {
    double sum = 0, yp = 1;
    for (const auto& ck : c) {
      sum += ck.eval(env, 0.3, 0.0) * yp;
      yp *= y;
    }
    return sum;
  };
  double prevRatio = 0;
  for (double y : {0.2, 0.1, 0.05}) {
    double err = std::abs(e.eval(env, 0.3, y) - truncated(y));
    double ratio = err / std::pow(y, n + 1);
    CHECK(ratio < 10.0);
    if (prevRatio != 0) CHECK(ratio < 4 * prevRatio + 1.0);
    prevRatio = ratio;
  }
}

TEST_CASE("numeric evaluation") {
  NullEnv null;
  CHECK((ScalarExpr::x() * ScalarExpr::y()).eval(null, 2, 3) == doctest::Approx(6));

  TestEnv env;
  env.fns["f^u"] = PolyFn{{{0.0}, {1.0}}};       // x
  env.fns["f^v"] = PolyFn{{{1.0, 1.0}}};         // 1 + y
  CHECK(jbExpr().eval(env, 0.0, 1.0) == doctest::Approx(4.0));

  // Finite-difference Jacobian oracle: u=x, v=(1+z^2)z at (x,z)=(0,1).
  auto v = [](double z) { return (1 + z * z) * z; };
  const double h = 1e-6;
  double dv = (v(1 + h) - v(1 - h)) / (2 * h);
  CHECK(jbExpr().eval(env, 0.0, 1.0) == doctest::Approx(dv).epsilon(1e-6));

  // det D for the worked example is identically 1.
  TestEnv env32;
  env32.fns["f^zeta"] = PolyFn{{{1.0}}};
  env32.fns["f^theta"] = PolyFn{{{1.0}}};
  env32.fns["g^zeta"] = PolyFn{{{0.0}}};
  env32.fns["g^theta"] = PolyFn{{{0.0}}};
  CHECK(detDExpr().eval(env32, 0.77, 0.31) == doctest::Approx(1.0));

  CHECK_THROWS_AS(ScalarExpr::fn2("nope").eval(null, 0, 0), Error);
}

TEST_CASE("mixed partials commute on random expression trees") {
  Rng rng{20240803};
  for (int trial = 0; trial < 25; ++trial) {
    ScalarExpr e = randomExpr(rng, 3);
    ScalarExpr xy = e.diff(Var::X).diff(Var::Y);
    ScalarExpr yx = e.diff(Var::Y).diff(Var::X);
    CHECK(xy.equals(yx));
  }
}

TEST_CASE("derivatives match finite differences on random trees") {
  Rng rng{977};
  TestEnv env = transformEnv();
  env.fns["g[0,0,0]"] = PolyFn{{{0.3}, {0.7}, {0.05}}};  // 0.3 + 0.7t + 0.05t^2
  int checked = 0;
  for (int trial = 0; trial < 40 && checked < 12; ++trial) {
    ScalarExpr e = randomExpr(rng, 2);
    ScalarExpr de = e.diff(Var::X);
    const double x = 0.4, y = 0.6, h = 1e-5;
    double fd, sym;
    fd = (e.eval(env, x + h, y) - e.eval(env, x - h, y)) / (2 * h);
    sym = de.eval(env, x, y);
    if (std::abs(sym) < 1e-9 && std::abs(fd) < 1e-6) continue;
    CHECK(std::abs(sym - fd) <= 1e-6 * std::max(1.0, std::abs(sym)));
    ++checked;
  }
  CHECK(checked > 0);
}

TEST_CASE("linear split over component atoms") {
  ScalarExpr g0 = ScalarExpr::fn1("g[0,1,1]");
  ScalarExpr g1 = ScalarExpr::fn1("g[1,0,0]");
  ScalarExpr m0 = ScalarExpr::fn2("f^u", 1, 0) * ScalarExpr::fn2("f^v");
  ScalarExpr m1 = m0 / (ScalarExpr::fn2("f^zeta") * ScalarExpr::fn2("f^theta"));
  ScalarExpr e = m0 * g0 + m1 * g1;

  auto isComponent = [](VarId v) {
    const VarInfo& info = var_info(v);
    return info.kind == VarKind::Free && info.arity == 1;
  };
  auto split = e.splitLinear(isComponent);
  CHECK(split.rest.isZero());
  REQUIRE(split.parts.size() == 2);
  for (const auto& [v, mult] : split.parts) {
    const VarInfo& info = var_info(v);
    if (info.name == "g[0,1,1]") CHECK(mult.equals(m0));
    if (info.name == "g[1,0,0]") CHECK(mult.equals(m1));
  }
}

TEST_CASE("substitution composes atoms") {
  // Substituting the base variable into a one-variable atom produces the
  // composed atom; the identity substitution is a no-op.
  ScalarExpr g = ScalarExpr::fn1("g[0,0,0]");
  ScalarExpr fu = ScalarExpr::fn2("f^u");
  ScalarExpr composed = g.substituteBase(fu, ScalarExpr::y());
  CHECK(composed.equals(ScalarExpr::composed1("g[0,0,0]", 0, fu)));
  CHECK(g.substituteBase(ScalarExpr::x(), ScalarExpr::y()).equals(g));

  // x+y^2 under (x,y) -> (y, x) swaps roles.
  ScalarExpr e = ScalarExpr::x() + ScalarExpr::y() * ScalarExpr::y();
  ScalarExpr swapped = e.substituteBase(ScalarExpr::y(), ScalarExpr::x());
  CHECK(swapped.equals(ScalarExpr::y() + ScalarExpr::x() * ScalarExpr::x()));
}
