#pragma once

// Stable Euler classes Tr^*(1) for cyclic groups, products of cyclic groups,
// wreath products Z/p^n wr Z/p and the semidirect products (Z/p)^n x| Z/p,
// together with ring presentations and the module basis of K(s)^*(BG_n).

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "chern/fgl.hpp"
#include "chern/symfun.hpp"
#include "chern/transfer.hpp"

namespace chern {

/// [q](z)/z through z-degree `order` (so [q](z) is needed to order + 1).
/// Lives in {z, generators} without a cap.
template <class S>
Series<S> quillen_euler(const FormalGroupLaw<S>& fgl, int q, int order) {
  if (q < 1) throw ValidationError("q must be >= 1");
  if (order < 0) throw ValidationError("order must be >= 0");
  if (fgl.order < order + 1)
    throw ValidationError("formal group law order " + std::to_string(fgl.order) +
                          " too small; need at least " + std::to_string(order + 1));
  const TablePtr t = univariate_table(fgl.ring, "z");
  const Series<S> z = Series<S>::variable(fgl.ring, t, "z", order + 1);
  // Double-and-add on [a](z): [a+b](z) = F([a](z), [b](z)).
  std::optional<Series<S>> acc;
  Series<S> power = z;
  for (int bits = q;;) {
    if (bits & 1) acc = acc ? fgl_apply(fgl, *acc, power, order + 1) : power;
    bits >>= 1;
    if (!bits) break;
    power = fgl_apply(fgl, power, power, order + 1);
  }
  const Series<S>& qz = *acc;
  if (!(qz.coefficient(Monomial{}) == qz.zero_scalar()))
    throw ConsistencyError("[q](z) has a constant term");
  Series<S> out = qz.divide_by_power(t->index("z"), 1);
  out.set_bound(order);
  if (!(out.coefficient(Monomial{}) == out.scalar(q)))
    throw ConsistencyError("[q](z)/z does not start with q");
  return out;
}

/// prod_i [q_i](z_i)/z_i in {z_1..z_m, generators}.
template <class S>
Series<S> product_euler(const FormalGroupLaw<S>& fgl, const std::vector<int>& qs, int order) {
  if (qs.empty()) throw ValidationError("product_euler needs at least one factor");
  const int m = static_cast<int>(qs.size());
  const TablePtr t = symmetric_table(fgl.ring, m, std::nullopt, "z_");
  Series<S> out = Series<S>::constant(fgl.ring, t, 1L);
  for (int i = 0; i < m; ++i) {
    const Series<S> e = quillen_euler(fgl, qs[i], order);
    const Series<S> zi = Series<S>::variable(fgl.ring, t, "z_" + std::to_string(i + 1));
    out = out * substitute(e, {{"z", zi}}, t, std::nullopt);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Presentations

struct RingPresentation {
  std::string theory;
  std::vector<GeneratorInfo> generators;  // name, topological degree
  std::vector<std::string> relations;     // printed relations, "= 0" implied
  std::map<std::string, std::string> data;  // named classes, e.g. "Tr*(1)"
  std::vector<std::string> unknowns;        // undetermined extension terms
  std::optional<std::vector<std::string>> basis;
  std::optional<mpz_class> rank;
};

/// m_s = (p^s - 1)/(p - 1) + 1.
inline int sigma_p_nilpotence(int p, int s) {
  if (!is_prime(p)) throw ValidationError("p must be prime");
  if (s < 1) throw ValidationError("s must be >= 1");
  return static_cast<int>((ipow(p, s) - 1) / (p - 1)) + 1;
}

/// -v_s y^{m_s - 1} in {y (degree 2(p-1)), v_s}.
inline Series<ModP> sigma_p_euler(int p, int s) {
  const CoefficientRing ring = make_ring(RingKind::MoravaK, p, s);
  const int ms = sigma_p_nilpotence(p, s);
  std::vector<Variable> vars{capped_var("y", 2 * (p - 1), ms)};
  append_generators(vars, ring);
  const TablePtr t = make_table(std::move(vars));
  return Series<ModP>::monomial(ring, t, {{"v_" + std::to_string(s), 1}, {"y", ms - 1}}, -1L);
}

/// K(s)^*(B Sigma_p) = K(s)^*[y]/(y^{m_s}) with Tr^*(1) = -v_s y^{m_s-1}.
inline RingPresentation sigma_p_presentation(int p, int s) {
  const int ms = sigma_p_nilpotence(p, s);
  RingPresentation r;
  r.theory = "K(" + std::to_string(s) + ") p=" + std::to_string(p) + " B Sigma_p";
  r.generators = {{"y", 2 * (p - 1)}};
  r.relations = {"y^" + std::to_string(ms)};
  r.data["m_s"] = std::to_string(ms);
  r.data["Tr*(1)"] = to_string(sigma_p_euler(p, s));
  std::vector<std::string> basis;
  for (int i = 0; i < ms; ++i) basis.push_back(i == 0 ? "1" : "y^" + std::to_string(i));
  r.rank = mpz_class(ms);
  r.basis = std::move(basis);
  return r;
}

struct SigmaPRelationReport {
  int p = 0, s = 0;
  Series<ModP> pi_side;     // (p-1)! [p](z)/z from BP, in K(s)^*(B Z/p)
  Series<ModP> sigma_side;  // rho^*(-v_s y^{m_s-1}) = -v_s z^{(p-1)(m_s-1)}
  bool well_formed = false; // BP side integral, constant term (p-1)! p
  bool matches = false;
};

/// (p-1)! [p](z)/z computed from the BP law, pushed to K(s), against
/// rho^*(Tr_{Sigma_p}^*(1)) with rho^*(y) = z^{p-1}.
inline SigmaPRelationReport bp_sigma_p_relation_check(int p, int s) {
  const long P = ipow(p, s);
  if (P > 64) throw ValidationError("p^s above 64 is beyond the BP law's desk range");
  const auto fgl = bp_fgl(p, s, static_cast<int>(P));
  const Series<Rational> e = quillen_euler(fgl, p, static_cast<int>(P) - 1) *
                             Rational(static_cast<long>(factorial(p - 1)));
  const CoefficientRing k = make_ring(RingKind::MoravaK, p, s);
  const TablePtr t = univariate_table(k, "z", static_cast<int>(P));
  const int ms = sigma_p_nilpotence(p, s);
  SigmaPRelationReport r{
      p, s, bp_to_morava(e, s, t),
      Series<ModP>::monomial(k, t, {{"v_" + std::to_string(s), 1}, {"z", (p - 1) * (ms - 1)}}, -1L)};
  r.well_formed = integrality_check(e, p) &&
                  e.coefficient(Monomial{}) == Rational(factorial(p - 1) * p);
  r.matches = r.pi_side == r.sigma_side;
  return r;
}

// ---------------------------------------------------------------------------
// Wreath products G_n = Z/p^n wr Z/p

/// Tr^*(1) for Z/p^n wr Z/p in K(s): Quillen's class prod_i [p^n](x_i)/x_i
/// is symmetric, so its norm is a pure sigma_p term and the transfer is that
/// term times Tr^*_pi(1) by Frobenius reciprocity.
inline TransferExpression<ModP> wreath_euler(int p, int n, int s) {
  if (n < 1) throw ValidationError("n must be >= 1");
  const long cap = ipow(p, static_cast<int>(n) * s);
  if (cap > 4096) throw ValidationError("p^(ns) above 4096 is beyond desk scale");
  const auto fgl = morava_fgl(p, s, static_cast<int>(cap));
  const Series<ModP> q = quillen_euler(fgl, static_cast<int>(ipow(p, n)), static_cast<int>(cap) - 1);

  const TablePtr xt = symmetric_table(fgl.ring, p, static_cast<int>(cap));
  Series<ModP> a = Series<ModP>::constant(fgl.ring, xt, 1L);
  for (int i = 1; i <= p; ++i) {
    const Series<ModP> xi = Series<ModP>::variable(fgl.ring, xt, "x_" + std::to_string(i));
    a = a * substitute(q, {{"z", xi}}, xt, std::nullopt);
  }
  const SigmaExpansion ex(p, s);
  const auto th = morava_theory(ex);
  auto out = transfer_of_norm_symmetric(a, th, "Tr*(1) Z/" + std::to_string(ipow(p, n)) + " wr Z/" +
                                                   std::to_string(p));
  return out;
}

struct WreathBasis {
  int p = 0, s = 0, n = 0;
  mpz_class formula_rank;                       // p^s p^{ns} + (p^{nsp} - p^{ns})/p
  std::optional<long> enumerated_rank;          // by explicit orbit listing
  long diagonal_count = 0;                      // gamma^i (z^j)^{(x)p}
  std::vector<std::vector<int>> orbit_classes;  // lex-least member per class
};

/// Basis of K(s)^*(BG_n) as a free K(s)^*-module.  Orbit classes are
/// listed explicitly when p^{nsp} <= max_tuples.
inline WreathBasis wreath_basis(int p, int s, int n, long max_tuples = 1L << 20) {
  if (!is_prime(p)) throw ValidationError("p must be prime");
  if (s < 1 || n < 1) throw ValidationError("s and n must be >= 1");
  WreathBasis b{p, s, n, 0, std::nullopt, 0, {}};
  mpz_class ps, pns, pnsp;
  mpz_ui_pow_ui(ps.get_mpz_t(), p, s);
  mpz_ui_pow_ui(pns.get_mpz_t(), p, static_cast<unsigned long>(n) * s);
  mpz_ui_pow_ui(pnsp.get_mpz_t(), p, static_cast<unsigned long>(n) * s * p);
  b.formula_rank = ps * pns + (pnsp - pns) / p;
  if (!pns.fits_slong_p() || !ps.fits_slong_p()) return b;
  b.diagonal_count = ps.get_si() * pns.get_si();
  if (!pnsp.fits_slong_p() || pnsp.get_si() > max_tuples) return b;

  const long N = pns.get_si(), total = pnsp.get_si();
  std::vector<char> seen(static_cast<std::size_t>(total), 0);
  auto encode = [&](const std::vector<int>& v) {
    long code = 0;
    for (int x : v) code = code * N + x;
    return code;
  };
  std::vector<int> tup(p, 0);
  for (long code = 0; code < total; ++code) {
    long c = code;
    for (int i = p - 1; i >= 0; --i) {
      tup[i] = static_cast<int>(c % N);
      c /= N;
    }
    if (seen[code]) continue;
    bool all_equal = true;
    for (int x : tup) all_equal = all_equal && x == tup[0];
    std::vector<int> rot = tup;
    for (int r = 0; r < p; ++r) {
      seen[encode(rot)] = 1;
      std::rotate(rot.begin(), rot.begin() + 1, rot.end());
    }
    if (!all_equal) b.orbit_classes.push_back(tup);
  }
  b.enumerated_rank = b.diagonal_count + static_cast<long>(b.orbit_classes.size());
  return b;
}

/// Presentation data for K(s)^*(BG_n).  For p = 2 the generators c, ct_1,
/// c_2 with the relations known only modulo (c); the undetermined
/// extension terms are listed as unknowns.
inline RingPresentation wreath_presentation(int p, int s, int n) {
  const WreathBasis b = wreath_basis(p, s, n);
  RingPresentation r;
  r.theory = "K(" + std::to_string(s) + ") p=" + std::to_string(p) + " B(Z/" +
             std::to_string(ipow(p, n)) + " wr Z/" + std::to_string(p) + ")";
  r.rank = b.formula_rank;
  const long pns = ipow(p, n * s), ps = ipow(p, s);
  r.generators = {{"c", 2}};
  r.relations = {"c^" + std::to_string(ps)};
  r.data["Tr*(1)"] = to_string(wreath_euler(p, n, s).value);
  if (p == 2) {
    r.generators.push_back({"ct_1", 2});
    r.generators.push_back({"c_2", 4});
    r.relations.push_back("ct_1*c");
    r.relations.push_back("ct_1^" + std::to_string(pns) + " + c*(?)");
    r.relations.push_back("c_2^" + std::to_string(pns) + " + c*(?)");
    r.unknowns = {"extension term of ct_1^" + std::to_string(pns) + " in the ideal (c)",
                  "extension term of c_2^" + std::to_string(pns) + " in the ideal (c)"};
  } else {
    for (int k = 1; k <= p; ++k) r.generators.push_back({"c_" + std::to_string(k), 2 * k});
    r.unknowns = {"relations among c_1..c_p beyond c*Tr*(omega_k) = 0"};
  }
  if (b.enumerated_rank) {
    std::vector<std::string> basis;
    for (long i = 0; i < ps; ++i)
      for (long j = 0; j < pns; ++j)
        basis.push_back("gamma^" + std::to_string(i) + " (x) (z^" + std::to_string(j) + ")^p");
    for (const auto& o : b.orbit_classes) {
      std::string s_ = "orbit(";
      for (std::size_t i = 0; i < o.size(); ++i) s_ += (i ? "," : "") + std::to_string(o[i]);
      basis.push_back(s_ + ")");
    }
    r.basis = std::move(basis);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Semidirect products (Z/p)^n x| Z/p

/// p^{-1} binom(p, n) mod p, the number of monomials of omega_n(l).
inline ModP semidirect_unit(int p, int n) {
  if (n < 1 || n > p - 1) throw ValidationError("unit is defined for 1 <= n <= p-1");
  return ModP(orbit_count_residue(p, n), static_cast<std::uint32_t>(p));
}

/// Tr_G^*(1) = u^{-1} v_s^n Tr_2^*(omega_n(p^s - 1)), u = p^{-1} binom(p,n)
/// mod p computed directly.  The factor v_s^n is Tr_1^*(1)'s coefficient
/// from Quillen's formula.  n = p is the wreath product Z/p wr Z/p.
inline TransferExpression<ModP> semidirect_euler(int p, int n, int s) {
  if (n < 1 || n > p) throw ValidationError("semidirect product needs 1 <= n <= p");
  if (n == p) {
    auto w = wreath_euler(p, 1, s);
    w.label = "Tr*(1) (Z/p)^p x| Z/p";
    return w;
  }
  const SigmaExpansion ex(p, s);
  const auto th = morava_theory(ex);
  const int P = ex.P();
  const TablePtr xt = symmetric_table(ex.ring(), p, P);
  const Series<ModP> a = omega_power<ModP>(p, n, P - 1, ex.ring(), xt);
  auto out = transfer_of_norm_symmetric(a, th, "Tr*(1) (Z/p)^" + std::to_string(n) + " x| Z/p");
  const ModP factor = semidirect_unit(p, n).inverse();
  const Series<ModP> vn = Series<ModP>::monomial(ex.ring(), th.table, {{ex.vs(), n}}, 1L);
  out.value = out.value * vn * factor;
  for (auto& c : out.omega_coeffs) c = c * vn * factor;
  if (out.euler_coeff) out.euler_coeff = *out.euler_coeff * vn * factor;
  return out;
}

/// value == sum_j Tr^*(omega_j) omega_coeffs[j] + Tr^*(1) euler_coeff, and
/// c Tr^*(1) = 0 under the cap on c.  Together these put c * value in the
/// ideal generated by the relations c Tr^*(omega_k) = 0, c Tr^*(1) = 0.
template <class S>
bool annihilated_by_c(const TransferExpression<S>& e, const TransferTheory<S>& th) {
  Series<S> rebuilt(th.ring, th.table);
  for (std::size_t j = 1; j < e.omega_coeffs.size(); ++j) rebuilt += th.tr_omega[j] * e.omega_coeffs[j];
  if (e.euler_coeff) rebuilt += th.tr_one * *e.euler_coeff;
  const Series<S> c = Series<S>::variable(th.ring, th.table, "c");
  return th.normalize(rebuilt) == e.value && th.normalize(c * th.tr_one).is_zero();
}

}  // namespace chern
