#pragma once

// Formal group laws for BP (p-typical, v-basis) and Morava K(s), with
// formal sums, q-series and axiom checks.
//
// Both laws come from a logarithm: F(x,y) = exp(log x + log y).  The sum
// (L(x) + L(y))^k is expanded binomially from univariate powers of L, which
// keeps every product an outer product of two small univariate series.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chern/hazewinkel.hpp"
#include "chern/series.hpp"

namespace chern {

template <class S>
struct FormalGroupLaw {
  CoefficientRing ring;
  TablePtr table;  // x, y, generators
  Series<S> F;
  int order = 0;   // total (x,y)-degree bound
  std::string provenance;
};

/// Table {x, y, generators}.
inline TablePtr fgl_table(const CoefficientRing& ring) {
  std::vector<Variable> vars{series_var("x"), series_var("y")};
  append_generators(vars, ring);
  return make_table(std::move(vars));
}

/// Table {z, generators} with optional cap on z.
inline TablePtr univariate_table(const CoefficientRing& ring, const std::string& var = "z",
                                 std::optional<int> cap = std::nullopt) {
  std::vector<Variable> vars{series_var(var, 2, cap)};
  append_generators(vars, ring);
  return make_table(std::move(vars));
}

/// Reduce a p-integral rational series to F_p, keeping the table.
inline Series<ModP> to_mod_p(const Series<Rational>& f, const CoefficientRing& ring) {
  Series<ModP> out(ring, f.table(), f.bound());
  for (const auto& [m, c] : f.terms()) out.add_term(m, reduce_mod_p(c, ring.p));
  return out;
}

/// Integer lift of a residue series to rationals.
inline Series<Rational> lift(const Series<ModP>& f) {
  Series<Rational> out(f.ring(), f.table(), f.bound());
  for (const auto& [m, c] : f.terms()) out.add_term(m, lift(c));
  return out;
}

namespace detail {

/// exp(L(x) + L(y)) for a logarithm L given in the FGL table in variable x.
inline Series<Rational> fgl_from_log(const Series<Rational>& log_x, int order) {
  const auto& t = log_x.vars();
  const std::size_t xi = t.index("x"), yi = t.index("y");
  std::vector<std::size_t> swap(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) swap[i] = i;
  swap[xi] = yi;
  swap[yi] = xi;

  const Series<Rational> exp_x = reversion(log_x, "x");
  std::vector<Series<Rational>> px{Series<Rational>::constant(log_x.ring(), log_x.table(), 1L, order)};
  for (int m = 1; m <= order; ++m) px.push_back(px.back() * log_x);
  std::vector<Series<Rational>> py;
  py.reserve(px.size());
  for (const auto& s : px) py.push_back(s.permuted(swap));

  Series<Rational> F(log_x.ring(), log_x.table(), order);
  for (int k = 1; k <= order; ++k) {
    const Series<Rational> bk = exp_x.coefficient_of(xi, k);
    if (bk.is_zero()) continue;
    Series<Rational> power(log_x.ring(), log_x.table(), order);  // (L(x)+L(y))^k
    for (int j = 0; j <= k; ++j) {
      if (px[k - j].is_zero() || py[j].is_zero()) continue;
      power += (px[k - j] * py[j]) * Rational(binomial(k, j));
    }
    F += bk * power;
  }
  return F;
}

}  // namespace detail

/// BP formal group law for prime p over Z_(p)[v_1..v_N], through total
/// degree `order`.  Uses the p-typical logarithm sum m_n x^{p^n} with m_n
/// written in the v-basis (v_k = 0 for k > N), so every coefficient is
/// p-integral; this is verified.
inline FormalGroupLaw<Rational> bp_fgl(int p, int N, int order) {
  if (order < 1) throw ValidationError("order must be >= 1");
  if (order > 64) throw ValidationError("BP order above 64 is beyond desk scale");
  const CoefficientRing ring = make_ring(RingKind::BPInteger, p, N);
  const TablePtr t = fgl_table(ring);
  const TablePtr gens = hazewinkel_table(ring);
  Series<Rational> log_x = Series<Rational>::variable(ring, t, "x", order);
  for (int n = 1; ipow(p, n) <= order; ++n) {
    const Series<Rational> mn = m_from_v_extended(n, ring, gens).remapped(t, order);
    log_x += mn * Series<Rational>::monomial(ring, t, {{"x", static_cast<int>(ipow(p, n))}}, 1L, order);
  }
  FormalGroupLaw<Rational> fgl{ring, t, detail::fgl_from_log(log_x, order), order, "bp-log"};
  if (!integrality_check(fgl.F, p))
    throw ConsistencyError("BP formal group law is not p-integral in the v-basis");
  return fgl;
}

/// BP logarithm coefficients kept symbolic: log x = sum_{n<=N} m_n x^{p^n}.
/// Over Q[m_1..m_N]; only meaningful for order < p^{N+1}, where dropping
/// m_n for n > N does not matter.
inline FormalGroupLaw<Rational> bp_fgl_m_basis(int p, int N, int order) {
  const CoefficientRing ring = make_ring(RingKind::BPRational, p, N);
  if (order >= ipow(p, N + 1))
    throw ValidationError("m-basis law needs order < p^(N+1) = " + std::to_string(ipow(p, N + 1)));
  std::vector<Variable> vars{series_var("x"), series_var("y")};
  append_generators(vars, ring, 'm');
  const TablePtr t = make_table(std::move(vars));
  Series<Rational> log_x = Series<Rational>::variable(ring, t, "x", order);
  for (int n = 1; n <= N && ipow(p, n) <= order; ++n)
    log_x += Series<Rational>::monomial(
        ring, t, {{"m_" + std::to_string(n), 1}, {"x", static_cast<int>(ipow(p, n))}}, 1L, order);
  return {ring, t, detail::fgl_from_log(log_x, order), order, "bp-log-m"};
}

/// Height-s Morava K-theory law over F_p[v_s^{+-1}] from the graded Honda
/// logarithm sum_i v_s^{e_i} x^{p^{is}} / p^i, e_i = (p^{is}-1)/(p^s-1).
inline FormalGroupLaw<ModP> morava_fgl(int p, int s, int order) {
  const CoefficientRing ring = make_ring(RingKind::MoravaK, p, s);
  const long ps = ipow(p, s);
  if (order < ps)
    throw ValidationError("Morava order must be >= p^s = " + std::to_string(ps));
  const TablePtr t = fgl_table(ring);
  const std::string vs = "v_" + std::to_string(s);
  Series<Rational> log_x = Series<Rational>::variable(ring, t, "x", order);
  long pis = ps;
  for (int i = 1; pis <= order; ++i, pis *= ps) {
    const int ei = static_cast<int>((pis - 1) / (ps - 1));
    log_x += Series<Rational>::monomial(ring, t, {{vs, ei}, {"x", static_cast<int>(pis)}},
                                        Rational(1, static_cast<unsigned long>(ipow(p, i))), order);
    if (pis > order / ps) break;
  }
  const Series<Rational> F = detail::fgl_from_log(log_x, order);
  return {ring, t, to_mod_p(F, ring), order, "honda-mod-p"};
}

/// F(a, b) for series a, b in a common target table.
template <class S>
Series<S> fgl_apply(const FormalGroupLaw<S>& fgl, const Series<S>& a, const Series<S>& b,
                    std::optional<int> bound) {
  return substitute(fgl.F, {{"x", a}, {"y", b}}, a.table(), bound);
}

/// Left-associated F(...F(a_1,a_2)...,a_m).
template <class S>
Series<S> formal_sum(const FormalGroupLaw<S>& fgl, const std::vector<Series<S>>& args,
                     std::optional<int> bound) {
  if (args.empty()) throw ValidationError("formal_sum needs at least one argument");
  for (const auto& a : args)
    if (!is_zero(a.coefficient(Monomial{})))
      throw ValidationError("formal_sum arguments must have zero constant term");
  Series<S> acc = args.front().truncated(bound);
  for (std::size_t i = 1; i < args.size(); ++i) acc = fgl_apply(fgl, acc, args[i], bound);
  return acc;
}

/// [q](z) in the given table (variable name `var`).
template <class S>
Series<S> q_series(const FormalGroupLaw<S>& fgl, int q, const TablePtr& table,
                   std::optional<int> bound, const std::string& var = "z") {
  if (q < 1) throw ValidationError("q must be >= 1");
  const Series<S> z = Series<S>::variable(fgl.ring, table, var, bound);
  Series<S> acc = z;
  for (int i = 2; i <= q; ++i) acc = fgl_apply(fgl, acc, z, bound);
  return acc;
}

struct AxiomReport {
  bool unit = false;
  bool commutativity = false;
  bool associativity = false;
  bool all() const { return unit && commutativity && associativity; }
};

template <class S>
AxiomReport fgl_axiom_check(const FormalGroupLaw<S>& fgl) {
  AxiomReport r;
  const auto& t = *fgl.table;
  const std::size_t xi = t.index("x"), yi = t.index("y");
  const Series<S> x = Series<S>::variable(fgl.ring, fgl.table, "x", fgl.order);
  const Series<S> y = Series<S>::variable(fgl.ring, fgl.table, "y", fgl.order);
  r.unit = fgl.F.at_zero(yi) == x && fgl.F.at_zero(xi) == y;

  std::vector<std::size_t> swap(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) swap[i] = i;
  swap[xi] = yi;
  swap[yi] = xi;
  r.commutativity = fgl.F.permuted(swap) == fgl.F;

  std::vector<Variable> vars{series_var("x"), series_var("y"), series_var("w")};
  append_generators(vars, fgl.ring);
  const TablePtr t3 = make_table(std::move(vars));
  auto var3 = [&](const char* n) { return Series<S>::variable(fgl.ring, t3, n, fgl.order); };
  const Series<S> fxy = fgl.F.remapped(t3, fgl.order);
  const Series<S> fyw = substitute(fgl.F, {{"x", var3("y")}, {"y", var3("w")}}, t3, fgl.order);
  const Series<S> lhs = substitute(fgl.F, {{"x", fxy}, {"y", var3("w")}}, t3, fgl.order);
  const Series<S> rhs = substitute(fgl.F, {{"x", var3("x")}, {"y", fyw}}, t3, fgl.order);
  r.associativity = lhs == rhs;
  return r;
}

/// Image of a BP series under BP_* -> K(s)_*: v_s kept, every other v_i sent
/// to zero, scalars reduced mod p.  Non-generator variables move by name.
inline Series<ModP> bp_to_morava(const Series<Rational>& f, int s, const TablePtr& target,
                                 std::optional<int> bound = std::nullopt) {
  const CoefficientRing ring = make_ring(RingKind::MoravaK, f.ring().p, s);
  const auto& src = f.vars();
  const std::string vs = "v_" + std::to_string(s);
  std::vector<std::size_t> dest(src.size(), kMaxVariables);
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i].generator && src[i].name != vs) continue;
    dest[i] = target->index(src[i].name);
  }
  Series<ModP> out(ring, target, bound);
  for (const auto& [m, c] : f.terms()) {
    Monomial t;
    bool killed = false;
    for (std::size_t i = 0; i < src.size() && !killed; ++i) {
      if (m[i] == 0) continue;
      if (dest[i] == kMaxVariables)
        killed = true;
      else
        t[dest[i]] = m[i];
    }
    if (killed || !out.admits(t)) continue;
    const ModP r = reduce_mod_p(c, ring.p);
    if (!is_zero(r)) out.add_term(t, r);
  }
  return out;
}

/// x + y - v_s sum_{0<j<p} p^{-1} binom(p,j) x^{j p^{s-1}} y^{(p-j) p^{s-1}}.
inline Series<ModP> leading_form(const FormalGroupLaw<ModP>& fgl) {
  const auto& ring = fgl.ring;
  const int p = ring.p, s = ring.height;
  const int q = static_cast<int>(ipow(p, s - 1));
  const std::string vs = "v_" + std::to_string(s);
  Series<ModP> rhs = Series<ModP>::variable(ring, fgl.table, "x", fgl.order) +
                     Series<ModP>::variable(ring, fgl.table, "y", fgl.order);
  for (int j = 1; j < p; ++j) {
    const mpz_class c = binomial(p, j) / p;
    rhs += Series<ModP>::monomial(ring, fgl.table, {{vs, 1}, {"x", j * q}, {"y", (p - j) * q}},
                                  -static_cast<long>(mpz_class(c % p).get_si()), fgl.order);
  }
  return rhs;
}

/// F agrees with leading_form on every term of x-degree below
/// p^{2(s-1)}, within the law's truncation.
inline bool leading_form_congruence(const FormalGroupLaw<ModP>& fgl) {
  const int p = fgl.ring.p, s = fgl.ring.height;
  const long modulus = ipow(p, 2 * (s - 1));
  const std::size_t xi = fgl.table->index("x");
  auto low = [&](const Series<ModP>& f) {
    return f.filtered([&](const Monomial& m, const ModP&) { return m[xi] < modulus; });
  };
  return low(fgl.F) == low(leading_form(fgl));
}

}  // namespace chern
