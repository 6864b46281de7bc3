#include "z22/grading.hpp"

namespace z22 {

std::string to_string(Degree d) {
  return "(" + std::to_string(int(d.a1)) + "," + std::to_string(int(d.a2)) + ")";
}

std::string to_string(const Monomial& m) {
  if (m.isUnit()) return "1";
  std::string s;
  if (m.zPower == 1) {
    s += "z";
  } else if (m.zPower != 0) {
    s += "z^" + std::to_string(m.zPower);
  }
  if (m.xi) s += s.empty() ? "xi" : "*xi";
  if (m.eta) s += s.empty() ? "eta" : "*eta";
  return s;
}

std::optional<SignedMonomial> monomial_mul(const Monomial& m1, const Monomial& m2) {
  if ((m1.xi & m2.xi) || (m1.eta & m2.eta)) return std::nullopt;
  // Move m2's z^{k2} left across m1's fermions; each crossing flips the sign.
  int crossings = m2.zPower * (int(m1.xi) + int(m1.eta));
  int sign = (crossings % 2 != 0) ? -1 : +1;
  Monomial prod{m1.zPower + m2.zPower, uint8_t(m1.xi | m2.xi), uint8_t(m1.eta | m2.eta)};
  return SignedMonomial{sign, prod};
}

}  // namespace z22
