#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>

namespace z22 {

/// An element of Z2 x Z2. Every generator, monomial and function of the
/// minimal graded superspace carries one; it drives all commutation signs.
struct Degree {
  uint8_t a1 = 0;
  uint8_t a2 = 0;

  constexpr Degree operator+(Degree o) const {
    return Degree{uint8_t((a1 + o.a1) & 1), uint8_t((a2 + o.a2) & 1)};
  }
  constexpr bool operator==(const Degree&) const = default;
};

inline constexpr Degree kDegreeX{0, 0};
inline constexpr Degree kDegreeXi{0, 1};
inline constexpr Degree kDegreeEta{1, 0};
inline constexpr Degree kDegreeZ{1, 1};

/// (-1)^{a.b} with the mod-2 inner product a.b = a1*b1 + a2*b2.
/// Elements of degree a and b satisfy X_a Y_b = sign(a,b) Y_b X_a.
constexpr int commutation_sign(Degree a, Degree b) {
  return ((a.a1 & b.a1) ^ (a.a2 & b.a2)) ? -1 : +1;
}

std::string to_string(Degree d);

/// Basis monomial z^k xi^a eta^b in the fixed generator order z, xi, eta.
/// zPower may be negative (Laurent elements); xi and eta are nilpotent.
struct Monomial {
  int zPower = 0;
  uint8_t xi = 0;   // 0 or 1
  uint8_t eta = 0;  // 0 or 1

  constexpr Degree degree() const {
    int k = zPower < 0 ? -zPower : zPower;
    return Degree{uint8_t((k + eta) & 1), uint8_t((k + xi) & 1)};
  }

  constexpr bool isUnit() const { return zPower == 0 && xi == 0 && eta == 0; }

  friend constexpr auto operator<=>(const Monomial& a, const Monomial& b) {
    if (auto c = a.zPower <=> b.zPower; c != 0) return c;
    if (auto c = a.xi <=> b.xi; c != 0) return c;
    return a.eta <=> b.eta;
  }
  friend constexpr bool operator==(const Monomial&, const Monomial&) = default;
};

std::string to_string(const Monomial& m);

struct SignedMonomial {
  int sign = 1;  // +1 or -1
  Monomial mono;
};

/// Product of two basis monomials, reordered into canonical z^k xi^a eta^b
/// form. Returns nullopt when nilpotency kills the product. The sign is
/// (-1)^{k2 (a1+b1)}: only z-powers crossing fermions contribute, since xi
/// and eta commute with each other.
std::optional<SignedMonomial> monomial_mul(const Monomial& m1, const Monomial& m2);

}  // namespace z22
