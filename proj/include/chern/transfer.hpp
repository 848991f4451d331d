#pragma once

// Transferred Chern classes.
//
// Morava K(s), any p: expand sigma_k(x, F(x,[1]z), ..., F(x,[p-1]z)) modulo
// z^{p^s} and solve
//   sigma_k = -sum_{0<=i<=p^s} lambda_i sigma_p^i + p^{-1} binom(p,k) x^k v_s z^{p^s-1}
// for lambda_i in K(s)^*[z]/(z^{p^s}).  Then Tr^*(omega_k) = c_k + sum lambda_i c_p^i.
//
// BP, p = 2: solve delta = d_0 + sum_{i>=2} d_i delta^i style recurrences in
// BP^*[[c]]/([2](c)) [[c_2]] (see bp_delta_p2 for the sign convention).

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "chern/fgl.hpp"
#include "chern/symfun.hpp"

namespace chern {

// ---------------------------------------------------------------------------
// Morava sigma expansions

/// Shared data for all k at one (p, s, x_order): the table {x, z, v_s}, the
/// roots F(x,[i]z), their elementary symmetric functions and powers of
/// sigma_p.
class SigmaExpansion {
 public:
  /// `law`, when given, must be the K(s) law to order >= x_order + p^s - 1;
  /// otherwise it is built here.
  SigmaExpansion(int p, int s, int x_order = 0,
                 std::shared_ptr<const FormalGroupLaw<ModP>> law = nullptr)
      : ring_(make_ring(RingKind::MoravaK, p, s)),
        P_(static_cast<int>(ipow(p, s))),
        x_order_(x_order == 0 ? static_cast<int>(ipow(p, s + 1)) : x_order) {
    if (x_order_ < ipow(p, s + 1))
      throw ValidationError("x_order must be >= p^(s+1) = " + std::to_string(ipow(p, s + 1)));
    if (x_order_ > 4000) throw ValidationError("x_order above 4000 is beyond desk scale");
    std::vector<Variable> vars{series_var("x", 2, x_order_ + 1), series_var("z", 2, P_)};
    append_generators(vars, ring_);
    table_ = make_table(std::move(vars));
    std::vector<Variable> zvars{series_var("z", 2, P_)};
    append_generators(zvars, ring_);
    z_table_ = make_table(std::move(zvars));
    if (law) {
      if (!(law->ring == ring_) || law->order < x_order_ + P_ - 1)
        throw ValidationError("supplied law does not cover order " + std::to_string(x_order_ + P_ - 1));
      fgl_ = std::move(law);
    } else {
      fgl_ = std::make_shared<const FormalGroupLaw<ModP>>(morava_fgl(p, s, x_order_ + P_ - 1));
    }
    build();
  }

  const CoefficientRing& ring() const { return ring_; }
  int p() const { return ring_.p; }
  int s() const { return ring_.height; }
  int P() const { return P_; }
  int x_order() const { return x_order_; }
  const TablePtr& table() const { return table_; }
  const TablePtr& z_table() const { return z_table_; }
  const FormalGroupLaw<ModP>& fgl() const { return *fgl_; }
  std::string vs() const { return "v_" + std::to_string(ring_.height); }

  /// F(x, [i]z), i = 0..p-1, with [i]z computed from the law.
  const Series<ModP>& root(int i) const { return roots_.at(static_cast<std::size_t>(i)); }
  /// [i]z modulo z^{p^s}.
  const Series<ModP>& multiple(int i) const { return multiples_.at(static_cast<std::size_t>(i)); }

  const Series<ModP>& sigma(int k) const {
    if (k < 0 || k > p()) throw ValidationError("sigma index out of range");
    return sigma_[static_cast<std::size_t>(k)];
  }

  const Series<ModP>& sigma_p_power(int i) const {
    if (i < 0 || i > P_) throw ValidationError("sigma_p power out of range");
    while (static_cast<int>(powers_.size()) <= i) powers_.push_back(powers_.back() * sigma_[p()]);
    return powers_[static_cast<std::size_t>(i)];
  }

  /// y = z^{p-1} monomial in the expansion table.
  Series<ModP> monomial(const std::vector<std::pair<std::string, int>>& e, long c = 1) const {
    return Series<ModP>::monomial(ring_, table_, e, c);
  }

 private:
  void build() {
    const int p = ring_.p;
    const Series<ModP> x = Series<ModP>::variable(ring_, table_, "x");
    const Series<ModP> z = Series<ModP>::variable(ring_, table_, "z");
    multiples_.push_back(Series<ModP>(ring_, table_));
    roots_.push_back(x);
    Series<ModP> acc = z;
    for (int i = 1; i < p; ++i) {
      if (i > 1) acc = fgl_apply(*fgl_, acc, z, std::nullopt);
      multiples_.push_back(acc);
      roots_.push_back(fgl_apply(*fgl_, x, acc, std::nullopt));
    }
    sigma_.assign(static_cast<std::size_t>(p + 1), Series<ModP>(ring_, table_));
    sigma_[0] = Series<ModP>::constant(ring_, table_, 1L);
    for (int i = 0; i < p; ++i)
      for (int k = i + 1; k >= 1; --k) sigma_[k] += sigma_[k - 1] * roots_[i];
    powers_.push_back(Series<ModP>::constant(ring_, table_, 1L));
  }

  CoefficientRing ring_;
  int P_;
  int x_order_;
  TablePtr table_;
  TablePtr z_table_;
  std::shared_ptr<const FormalGroupLaw<ModP>> fgl_;
  std::vector<Series<ModP>> multiples_;
  std::vector<Series<ModP>> roots_;
  std::vector<Series<ModP>> sigma_;
  mutable std::vector<Series<ModP>> powers_;
};

/// sigma_k(x, F(x,[1]z), ..., F(x,[p-1]z)) over K(s), mod z^{p^s}, x-degree
/// <= x_order.
inline Series<ModP> sigma_chern_expansion(int p, int s, int k, int x_order = 0) {
  SigmaExpansion e(p, s, x_order);
  if (k < 1 || k > p) throw ValidationError("k must lie in 1..p");
  return e.sigma(k);
}

/// p^{-1} binom(p,k) mod p.
inline long orbit_count_residue(int p, int k) {
  const mpz_class c = binomial(p, k) / p;
  return mpz_class(c % p).get_si();
}

struct LambdaRow {
  int k = 0;
  std::vector<Series<ModP>> lambda;  // lambda[i] in {z, v_s}, i = 0..p^s
  bool residual_zero = false;        // every x-coefficient of the identity vanishes
  int passes = 0;                    // Neumann iterations used
};

namespace detail {

/// [x^e] of f for every e divisible by `step`, moved to `target`.
inline std::map<int, Series<ModP>> x_coefficients(const Series<ModP>& f, std::size_t xi, int step,
                                                  const TablePtr& target) {
  std::map<int, Series<ModP>> out;
  const auto& src = f.vars();
  std::vector<std::size_t> rename(src.size(), kMaxVariables);
  for (std::size_t i = 0; i < src.size(); ++i)
    if (i != xi)
      if (auto j = target->find(src[i].name)) rename[i] = *j;
  for (const auto& [m, c] : f.terms()) {
    if (m[xi] % step != 0) continue;
    Monomial t;
    for (std::size_t i = 0; i < src.size(); ++i)
      if (i != xi && m[i] != 0) t[rename[i]] = m[i];
    auto [it, ins] = out.try_emplace(m[xi], Series<ModP>(f.ring(), target));
    it->second.add_term(t, c);
  }
  return out;
}

}  // namespace detail

/// The identity's left side minus right side:
///   sigma_k + sum_i lambda_i sigma_p^i - p^{-1} binom(p,k) x^k v_s z^{p^s-1}.
inline Series<ModP> lambda_residual(const SigmaExpansion& e, int k,
                                    const std::vector<Series<ModP>>& lambda) {
  Series<ModP> r = e.sigma(k);
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    if (lambda[i].is_zero()) continue;
    r += lambda[i].remapped(e.table()) * e.sigma_p_power(static_cast<int>(i));
  }
  const long ck = orbit_count_residue(e.p(), k);
  r -= e.monomial({{"x", k}, {e.vs(), 1}, {"z", e.P() - 1}}, ck);
  return r;
}

/// Solve for lambda^{(k)}_0..lambda^{(k)}_{p^s}.  lambda_0 is read at x = 0;
/// lambda_1..lambda_P come from the x^{jp} coefficients, j = 1..P, where the
/// system matrix [x^{jp}] sigma_p^i is the identity plus entries in (z).  The
/// nilpotent part is not triangular in general, so the system is solved by
/// the Neumann iteration lambda <- r - N lambda, which terminates because
/// z^{p^s} = 0.  Every other x-coefficient is then checked to vanish.
inline LambdaRow morava_lambda(const SigmaExpansion& e, int k) {
  const int p = e.p(), P = e.P();
  if (k < 1 || k > p - 1) throw ValidationError("k must lie in 1..p-1");
  const auto& ring = e.ring();
  const TablePtr& zt = e.z_table();
  const std::size_t xi = e.table()->index("x");
  const std::size_t zi_small = zt->index("z");

  LambdaRow row;
  row.k = k;
  row.lambda.assign(static_cast<std::size_t>(P + 1), Series<ModP>(ring, zt));

  auto sk = detail::x_coefficients(e.sigma(k), xi, p, zt);
  {
    auto s0 = detail::x_coefficients(e.sigma(k), xi, 1, zt);
    auto it = s0.find(0);
    if (it != s0.end()) row.lambda[0] = -it->second;
  }
  std::vector<Series<ModP>> r(static_cast<std::size_t>(P + 1), Series<ModP>(ring, zt));
  for (int j = 1; j <= P; ++j) {
    auto it = sk.find(j * p);
    if (it != sk.end()) r[j] = -it->second;
  }
  // N[j][i] = [x^{jp}] sigma_p^i - delta_{ij}
  std::vector<std::vector<std::pair<int, Series<ModP>>>> N(static_cast<std::size_t>(P + 1));
  for (int i = 1; i <= P; ++i) {
    auto coeffs = detail::x_coefficients(e.sigma_p_power(i), xi, p, zt);
    for (auto& [ex, c] : coeffs) {
      const int j = ex / p;
      if (j < 1 || j > P) continue;
      Series<ModP> entry = c;
      if (i == j) entry -= Series<ModP>::constant(ring, zt, 1L);
      for (const auto& [m, v] : entry.terms())
        if (m[zi_small] == 0)
          throw ConsistencyError("lambda system is not unipotent at (" + std::to_string(j) + "," +
                                 std::to_string(i) + ")");
      if (!entry.is_zero()) N[j].emplace_back(i, std::move(entry));
    }
  }
  std::vector<Series<ModP>> lam(r.begin(), r.end());
  for (int pass = 1; pass <= P + 2; ++pass) {
    std::vector<Series<ModP>> next(r.begin(), r.end());
    for (int j = 1; j <= P; ++j)
      for (const auto& [i, entry] : N[j])
        if (!lam[i].is_zero()) next[j] -= entry * lam[i];
    row.passes = pass;
    if (next == lam) break;
    if (pass == P + 2) throw ConsistencyError("lambda iteration did not stabilize");
    lam = std::move(next);
  }
  for (int i = 1; i <= P; ++i) row.lambda[i] = lam[i];
  row.residual_zero = lambda_residual(e, k, row.lambda).is_zero();
  if (!row.residual_zero)
    throw ConsistencyError("lambda residual does not vanish for k=" + std::to_string(k));
  return row;
}

/// Right side of the sigma_1 closed form:
///   v_s (z^{p^s-1} x + sum_{i=1}^{s-1} z^{p^s-p^i} sigma_p^{p^{i-1}}).
inline Series<ModP> sigma1_closed_form(const SigmaExpansion& e) {
  const int p = e.p(), s = e.s(), P = e.P();
  Series<ModP> rhs = e.monomial({{"z", P - 1}, {"x", 1}});
  for (int i = 1; i <= s - 1; ++i)
    rhs += e.monomial({{"z", P - static_cast<int>(ipow(p, i))}}) *
           e.sigma_p_power(static_cast<int>(ipow(p, i - 1)));
  return e.monomial({{e.vs(), 1}}) * rhs;
}

// ---------------------------------------------------------------------------
// Transfer expressions

/// Table {c, c_1..c_p, generators}; deg c = 2 for the pi-cover and
/// 2(p-1) for the Sigma_p-cover.  c carries the given cap.
inline TablePtr cover_table(const CoefficientRing& ring, bool sigma_cover, int c_cap,
                            std::optional<int> c2_cap = std::nullopt) {
  const int p = ring.p;
  std::vector<Variable> vars{capped_var("c", sigma_cover ? 2 * (p - 1) : 2, c_cap)};
  for (int k = 1; k <= p; ++k) {
    Variable v = series_var("c_" + std::to_string(k), 2 * k);
    v.weight = 0;
    if (k == 2 && c2_cap) v.cap = c2_cap;
    vars.push_back(v);
  }
  append_generators(vars, ring);
  return make_table(std::move(vars));
}

template <class S>
struct TransferExpression {
  std::string basis;  // "pi-cover" or "sigma-cover"
  std::string label;
  Series<S> value;
  /// Structured form value = sum_j Tr^*(omega_j) omega_coeffs[j] + Tr^*(1) euler_coeff,
  /// when known.  omega_coeffs is indexed 1..p-1 (entry 0 unused).
  std::vector<Series<S>> omega_coeffs;
  std::optional<Series<S>> euler_coeff;
};

/// Everything needed to transfer along the pi-cover for one theory.
template <class S>
struct TransferTheory {
  std::string name;
  CoefficientRing ring;
  TablePtr table;                   // cover_table(..., false, ...)
  std::vector<Series<S>> tr_omega;  // Tr^*(omega_k), index 1..p-1
  Series<S> tr_one;                 // Tr^*(1)
  std::optional<QuotientSpec> quotient;

  Series<S> normalize(const Series<S>& f) const { return quotient ? reduce(f, *quotient) : f; }
};

/// Move a z-series into the cover table, sending z^a to c^{a/step}.
template <class S>
Series<S> z_to_c(const Series<S>& f, const TablePtr& target, int step = 1,
                 const std::string& var = "c") {
  const std::size_t zi = f.vars().index("z");
  const std::size_t ci = target->index(var);
  Series<S> out(f.ring(), target);
  for (const auto& [m, c] : f.terms()) {
    if (m[zi] % step != 0)
      throw ConsistencyError("entry is not a polynomial in z^" + std::to_string(step));
    Monomial t;
    for (std::size_t i = 0; i < f.vars().size(); ++i) {
      if (m[i] == 0) continue;
      if (i == zi)
        t[ci] = static_cast<Exponent>(m[i] / step);
      else
        t[target->index(f.vars()[i].name)] = m[i];
    }
    out.add_term(t, c);
  }
  return out;
}

/// sigma_k written back in sigma_p, x and y = z^{p-1}, the layout of a
/// solved row:  sigma_k = -sum_i lambda_i sigma_p^i + u_k v_s y^{m_s-1} x^k,
/// u_k = p^{-1} binom(p,k).  Table {S (sigma_p), x, y, v_s}.
struct SigmaFormula {
  int p = 0, s = 0, k = 0;
  Series<ModP> value;
};

inline TablePtr sigma_formula_table(const CoefficientRing& ring) {
  const int p = ring.p;
  std::vector<Variable> vars{series_var("s" + std::to_string(p), 2 * p), series_var("x", 2),
                             series_var("y", 2 * (p - 1))};
  for (auto& v : vars) v.weight = 0;
  append_generators(vars, ring);
  return make_table(std::move(vars));
}

inline SigmaFormula sigma_formula(const LambdaRow& row, const SigmaExpansion& e) {
  const int p = e.p(), P = e.P();
  const TablePtr t = sigma_formula_table(e.ring());
  const std::string sp = "s" + std::to_string(p);
  Series<ModP> out(e.ring(), t);
  auto in_y = [&](const Series<ModP>& f) { return z_to_c(f, t, p - 1, "y"); };
  for (std::size_t i = 0; i < row.lambda.size(); ++i)
    if (!row.lambda[i].is_zero())
      out -= in_y(row.lambda[i]) * Series<ModP>::monomial(e.ring(), t, {{sp, static_cast<int>(i)}}, 1L);
  out += Series<ModP>::monomial(e.ring(), t, {{e.vs(), 1}, {"y", (P - 1) / (p - 1)}, {"x", row.k}},
                                orbit_count_residue(p, row.k));
  return {p, e.s(), row.k, out};
}

/// Substitute sigma_p -> its expansion and y -> z^{p-1} back into the
/// expansion table; equal to e.sigma(k) exactly when the formula is right.
inline Series<ModP> evaluate_sigma_formula(const Series<ModP>& f, const SigmaExpansion& e) {
  const int p = e.p();
  const auto& t = f.vars();
  const std::size_t si = t.index("s" + std::to_string(p)), yi = t.index("y"), xi = t.index("x");
  Series<ModP> out(e.ring(), e.table());
  for (const auto& [m, c] : f.terms()) {
    Monomial rest;
    for (std::size_t i = 0; i < t.size(); ++i)
      if (i != si && i != yi && i != xi && m[i]) rest[e.table()->index(t[i].name)] = m[i];
    rest[e.table()->index("x")] = m[xi];
    rest[e.table()->index("z")] = static_cast<Exponent>(m[yi] * (p - 1));
    out += e.sigma_p_power(m[si]).shifted(rest, c);
  }
  return out;
}

/// Tr^*(omega_k) = c_k + sum_i lambda_i c_p^i (pi-cover).
inline TransferExpression<ModP> morava_transfer_omega(const LambdaRow& row, const CoefficientRing& ring) {
  const int p = ring.p, P = static_cast<int>(ipow(p, ring.height));
  const TablePtr t = cover_table(ring, false, P);
  const std::string cp = "c_" + std::to_string(p);
  Series<ModP> v = Series<ModP>::variable(ring, t, "c_" + std::to_string(row.k));
  for (std::size_t i = 0; i < row.lambda.size(); ++i)
    if (!row.lambda[i].is_zero())
      v += z_to_c(row.lambda[i], t) *
           Series<ModP>::monomial(ring, t, {{cp, static_cast<int>(i)}}, 1L);
  return {"pi-cover", "Tr*(omega_" + std::to_string(row.k) + ")", v, {}, std::nullopt};
}

/// ct_k = Tr^*(x_1...x_k) along the Sigma_p-cover:
///   k!(p-k)! (c_k + sum_i lambda_i c_p^i), y = z^{p-1} written as c.
inline TransferExpression<ModP> morava_transfer_sigma(const LambdaRow& row, const CoefficientRing& ring) {
  const int p = ring.p, P = static_cast<int>(ipow(p, ring.height));
  const int ms = (P - 1) / (p - 1) + 1;
  const TablePtr t = cover_table(ring, true, ms);
  const std::string cp = "c_" + std::to_string(p);
  const ModP scale(factorial(row.k) * factorial(p - row.k), static_cast<std::uint32_t>(p));
  Series<ModP> v = Series<ModP>::variable(ring, t, "c_" + std::to_string(row.k)) * scale;
  for (std::size_t i = 0; i < row.lambda.size(); ++i)
    if (!row.lambda[i].is_zero())
      v += z_to_c(row.lambda[i], t, p - 1) * scale *
           Series<ModP>::monomial(ring, t, {{cp, static_cast<int>(i)}}, 1L);
  return {"sigma-cover", "ct_" + std::to_string(row.k), v, {}, std::nullopt};
}

/// Tr^*(x) = c_1 - v_s sum_{1<=j<=s-1} c^{p^s-p^j} c_p^{p^{j-1}}, plus the
/// lambda_0 = -c term that appears for p = 2 only.
inline TransferExpression<ModP> transfer_c1(int p, int s) {
  const CoefficientRing ring = make_ring(RingKind::MoravaK, p, s);
  const int P = static_cast<int>(ipow(p, s));
  const TablePtr t = cover_table(ring, false, P);
  const std::string vs = "v_" + std::to_string(s), cp = "c_" + std::to_string(p);
  Series<ModP> v = Series<ModP>::variable(ring, t, "c_1");
  for (int j = 1; j <= s - 1; ++j)
    v -= Series<ModP>::monomial(
        ring, t,
        {{vs, 1}, {"c", P - static_cast<int>(ipow(p, j))}, {cp, static_cast<int>(ipow(p, j - 1))}}, 1L);
  if (p == 2) v -= Series<ModP>::variable(ring, t, "c");
  return {"pi-cover", "Tr*(x)", v, {}, std::nullopt};
}

/// Transfer data for K(s) at prime p: every Tr^*(omega_k) and Tr^*(1) = v_s c^{p^s-1}.
inline TransferTheory<ModP> morava_theory(const SigmaExpansion& e) {
  const auto& ring = e.ring();
  const int p = e.p(), P = e.P();
  TransferTheory<ModP> th{"K(" + std::to_string(e.s()) + ") p=" + std::to_string(p), ring,
                          cover_table(ring, false, P), {}, Series<ModP>(ring, cover_table(ring, false, P)),
                          std::nullopt};
  th.tr_omega.push_back(Series<ModP>(ring, th.table));
  for (int k = 1; k < p; ++k)
    th.tr_omega.push_back(morava_transfer_omega(morava_lambda(e, k), ring).value.remapped(th.table));
  th.tr_one = Series<ModP>::monomial(ring, th.table, {{e.vs(), 1}, {"c", P - 1}}, 1L);
  return th;
}

// ---------------------------------------------------------------------------
// BP, p = 2

/// d-series of the relation c c_1 = d_0 c + sum_{n>=2} d_n c c_1^n.
struct DSeries {
  CoefficientRing ring;
  TablePtr table;                 // {c, c_1, c_2, generators}
  std::vector<Series<Rational>> d;  // d[0], d[1] (zero), d[2], ...
  Series<Rational> gamma;         // B_0(0, c_2) / 2
  Series<Rational> unit;          // coefficient of c c_1 before division
  Series<Rational> two_series;    // [2](c) in the table
  QuotientSpec quotient;          // [2](c) = 0
  int z_order = 0;
  int c2_order = 0;
};

/// Smallest N >= 3 with 2^{N+1} >= z_order + 2 c2_order: no v_n with larger n
/// can reach a delta_j term below z^{z_order} for j <= c2_order.
inline int bp_generators_needed(int z_order, int c2_order) {
  int N = 3;
  while (ipow(2, N + 1) < z_order + 2 * c2_order) ++N;
  return N;
}

inline int bp_fgl_order_needed(int z_order, int c2_order) {
  return (z_order + 2 * c2_order) + z_order + 2;
}

/// Build the d-series from a p = 2 law (BP or a mock such as the additive
/// law).  Works in A[[c, c_1, c_2]] truncated by caps; the [2](c) relation is
/// only used through gamma and the returned quotient.
inline DSeries bp_d_series_p2(const FormalGroupLaw<Rational>& fgl, int z_order, int c2_order) {
  if (fgl.ring.p != 2) throw ValidationError("the BP delta solver is implemented for p = 2");
  if (z_order < 1 || c2_order < 1) throw ValidationError("orders must be positive");
  const int Z = z_order, K = c2_order;
  const int U = Z + 2 * K;
  if (fgl.order < U + Z + 1)
    throw ValidationError("formal group law order " + std::to_string(fgl.order) +
                          " too small; need " + std::to_string(U + Z + 1));
  const auto& ring = fgl.ring;

  std::vector<Variable> gv{series_var("u_1"), series_var("u_2"), capped_var("c", 2, Z + 2)};
  append_generators(gv, ring);
  const TablePtr tg = make_table(std::move(gv));
  auto var = [&](const TablePtr& t, const char* n) { return Series<Rational>::variable(ring, t, n, U); };
  const Series<Rational> f1 = fgl_apply(fgl, var(tg, "u_1"), var(tg, "c"), U);
  const Series<Rational> f2 = fgl_apply(fgl, var(tg, "u_2"), var(tg, "c"), U);
  const Series<Rational> G = f1 * f2 - var(tg, "u_1") * var(tg, "u_2");

  auto make_r = [&](int ccap) {
    std::vector<Variable> v{capped_var("c", 2, ccap), capped_var("c_1", 2, Z + 1),
                            capped_var("c_2", 4, K + 1)};
    append_generators(v, ring);
    return make_table(std::move(v));
  };
  const TablePtr t2 = make_r(Z + 2);
  const TablePtr tr = make_r(Z + 1);
  const Series<Rational> Gs =
      express_in_elementary(G, positions(*tg, {"u_1", "u_2"}), t2, positions(*t2, {"c_1", "c_2"}));
  const std::size_t ci = t2->index("c");
  const Series<Rational> b = Gs.divide_by_power(ci, 1).remapped(tr, std::nullopt);

  DSeries out{ring, tr, {}, Series<Rational>(ring, tr), Series<Rational>(ring, tr),
              Series<Rational>(ring, tr), {}, Z, K};
  const Series<Rational> c2z = Series<Rational>::variable(ring, t2, "c");
  const Series<Rational> two = q_series(fgl, 2, t2, std::nullopt, "c");
  out.two_series = two.remapped(tr);
  out.quotient = QuotientSpec::series_relation("c", out.two_series);
  const Series<Rational> tr_one = two.divide_by_power(ci, 1).remapped(tr, std::nullopt);

  const std::size_t c1 = tr->index("c_1"), cr = tr->index("c");
  std::vector<Series<Rational>> B;
  for (int j = 0; j <= Z; ++j) B.push_back(b.coefficient_of(c1, j));

  out.gamma = B[0].at_zero(cr) * Rational(1, 2);
  for (const auto& [m, c] : out.gamma.terms())
    if (!is_p_integral(c, 2)) throw ConsistencyError("gamma_{00k} is not divisible by 2");
  const Series<Rational> B0 = B[0] - out.gamma * tr_one;

  out.unit = B[1];
  if (out.unit.coefficient(Monomial{}) != 1)
    throw ConsistencyError("coefficient of c c_1 is not a unit with constant term 1");
  const Series<Rational> nil = out.unit - Series<Rational>::constant(ring, tr, 1L);
  Series<Rational> inv = Series<Rational>::constant(ring, tr, 1L), term = inv;
  for (int i = 0; i < Z + K + 2 && !term.is_zero(); ++i) {
    term = -(term * nil);
    inv += term;
  }
  out.d.push_back(-(inv * B0));
  out.d.push_back(Series<Rational>(ring, tr));
  for (int j = 2; j <= Z; ++j) out.d.push_back(-(inv * B[j]));
  return out;
}

struct BPDelta {
  CoefficientRing ring;
  TablePtr z_table;                     // {z (cap z_order), generators}
  std::vector<Series<Rational>> delta;  // delta_j, j = 0..c2_order, normal form
  DSeries dseries;
  bool base_case = false;      // c = d_0(c,0) + sum d_j(c,0) c^j in the quotient
  bool residual_zero = false;  // eps = d_0 + sum d_j eps^j in the quotient
  bool annihilation = false;   // c * b(c, eps, c_2) = 0
  bool homogeneous = false;    // deg delta_j = 2 - 4j
  bool rho_consistent = false; // delta_j(0) = 0 for j >= 1
};

namespace detail {

inline Series<Rational> series_eval_eps(const DSeries& ds, const std::vector<Series<Rational>>& coeffs,
                                        const Series<Rational>& eps, std::size_t first) {
  Series<Rational> acc(ds.ring, ds.table);
  Series<Rational> pw = Series<Rational>::constant(ds.ring, ds.table, 1L);
  for (std::size_t j = 0; j < coeffs.size(); ++j) {
    if (j >= first && !coeffs[j].is_zero()) acc += coeffs[j] * pw;
    pw = pw * eps;
    if (pw.is_zero()) break;
  }
  return acc;
}

}  // namespace detail

/// delta_j in BP^*[[z]]/([2](z)) modulo z^{z_order}, j <= c2_order.
///
/// From c Tr^*(x) = 0 one gets c c_1^n = c eps^n with eps = -delta =
/// c - sum_{j>=1} delta_j c_2^j, so the relation for c c_1 becomes
///   eps = d_0 + sum_{n>=2} d_n eps^n.
/// It is solved one c_2-order at a time: eps_m = (1 - L)^{-1} rhs_m with
/// L = sum n d_n(c,0) c^{n-1}, which lies in (c).
inline BPDelta bp_delta_p2_with(const FormalGroupLaw<Rational>& fgl, int z_order, int c2_order) {
  DSeries ds = bp_d_series_p2(fgl, z_order, c2_order);
  const auto& ring = ds.ring;
  const TablePtr& t = ds.table;
  const std::size_t c2 = t->index("c_2");
  const Series<Rational> c = Series<Rational>::variable(ring, t, "c");

  std::vector<Series<Rational>> dc0;  // d_n(c, 0)
  for (const auto& d : ds.d) dc0.push_back(d.at_zero(c2));
  Series<Rational> L(ring, t);
  {
    Series<Rational> pw = Series<Rational>::constant(ring, t, 1L);
    for (std::size_t n = 1; n < dc0.size(); ++n) {
      if (n >= 2) L += dc0[n] * pw * Rational(static_cast<long>(n));
      pw = pw * c;
    }
  }
  Series<Rational> one_minus_L_inv = Series<Rational>::constant(ring, t, 1L), term = one_minus_L_inv;
  while (!(term = term * L).is_zero()) one_minus_L_inv += term;

  BPDelta out{ring, univariate_table(ring, "z", z_order), {}, ds};
  const Series<Rational> base = reduce(c - detail::series_eval_eps(ds, dc0, c, 0), ds.quotient);
  out.base_case = base.is_zero();
  if (!out.base_case) throw ConsistencyError("base case c = d_0 + sum d_n c^n fails");

  Series<Rational> eps = c;
  for (int m = 1; m <= c2_order; ++m) {
    const Series<Rational> h = detail::series_eval_eps(ds, ds.d, eps, 0);
    const Series<Rational> rhs = h.coefficient_of(c2, m);
    const Series<Rational> em = one_minus_L_inv * rhs;
    eps += em * Series<Rational>::monomial(ring, t, {{"c_2", m}}, 1L);
    const Series<Rational> check = (eps - detail::series_eval_eps(ds, ds.d, eps, 0)).coefficient_of(c2, m);
    if (!check.is_zero())
      throw ConsistencyError("c_2-order " + std::to_string(m) + " did not stabilize");
  }
  out.residual_zero = reduce(eps - detail::series_eval_eps(ds, ds.d, eps, 0), ds.quotient).is_zero();

  // Independent check: c * b(c, eps, c_2) = 0 where b = sum_n B_n c_1^n is
  // rebuilt from the d-series (B_n = -u d_n, B_1 = u, B_0 = -u d_0).
  {
    std::vector<Series<Rational>> bcoef;
    bcoef.push_back(-(ds.unit * ds.d[0]));
    bcoef.push_back(ds.unit);
    for (std::size_t n = 2; n < ds.d.size(); ++n) bcoef.push_back(-(ds.unit * ds.d[n]));
    const Series<Rational> cb = c * detail::series_eval_eps(ds, bcoef, eps, 0);
    out.annihilation = reduce(cb, ds.quotient).is_zero();
  }

  out.delta.push_back(Series<Rational>::monomial(ring, out.z_table, {{"z", 1}}, -1L));
  const std::size_t zi = out.z_table->index("z");
  out.homogeneous = true;
  out.rho_consistent = true;
  for (int m = 1; m <= c2_order; ++m) {
    Series<Rational> dm = reduce(-eps.coefficient_of(c2, m), ds.quotient);
    Series<Rational> dz(ring, out.z_table);
    for (const auto& [mono, coef] : dm.terms()) {
      Monomial tz;
      for (std::size_t i = 0; i < t->size(); ++i) {
        if (mono[i] == 0) continue;
        const auto& name = (*t)[i].name;
        tz[out.z_table->index(name == "c" ? std::string("z") : name)] = mono[i];
      }
      dz.add_term(tz, coef);
    }
    if (dz.homogeneous_degree(2 - 4 * m) != std::optional<int>(2 - 4 * m)) out.homogeneous = false;
    for (const auto& [mono, coef] : dz.terms())
      if (mono[zi] == 0) out.rho_consistent = false;
    out.delta.push_back(std::move(dz));
  }
  return out;
}

inline BPDelta bp_delta_p2(int z_order, int c2_order) {
  const int N = bp_generators_needed(z_order, c2_order);
  return bp_delta_p2_with(bp_fgl(2, N, bp_fgl_order_needed(z_order, c2_order)), z_order, c2_order);
}

/// Transfer data for BP at p = 2: Tr^*(x) = c_1 - c + sum delta_j c_2^j and
/// Tr^*(1) = [2](c)/c.
inline TransferTheory<Rational> bp2_theory(const BPDelta& bd) {
  const auto& ring = bd.ring;
  const int Z = bd.dseries.z_order, K = bd.dseries.c2_order;
  const TablePtr t = cover_table(ring, false, Z, K + 1);
  TransferTheory<Rational> th{"BP p=2", ring, t, {}, Series<Rational>(ring, t), std::nullopt};
  th.tr_omega.push_back(Series<Rational>(ring, t));
  Series<Rational> trx = Series<Rational>::variable(ring, t, "c_1");
  for (std::size_t j = 0; j < bd.delta.size(); ++j)
    trx += z_to_c(bd.delta[j], t) * Series<Rational>::monomial(ring, t, {{"c_2", static_cast<int>(j)}}, 1L);
  const Series<Rational> two = bd.dseries.two_series.remapped(t, std::nullopt);
  th.quotient = QuotientSpec::series_relation("c", two);
  th.tr_omega.push_back(th.normalize(trx));
  // [2](c)/c from the relation series itself (exact up to the cap).
  const std::size_t ci = t->index("c");
  Series<Rational> one(ring, t);
  for (const auto& [m, coef] : bd.dseries.two_series.terms()) {
    Monomial mm;
    for (std::size_t i = 0; i < bd.dseries.table->size(); ++i)
      if (m[i]) mm[t->index((*bd.dseries.table)[i].name)] = m[i];
    mm[ci] = static_cast<Exponent>(mm[ci] - 1);
    one.add_term(mm, coef);
  }
  th.tr_one = one;
  return th;
}

// ---------------------------------------------------------------------------
// Transfers of norm-symmetric polynomials

inline Series<Rational> lift_series(const Series<Rational>& f) { return f; }
inline Series<Rational> lift_series(const Series<ModP>& f) { return lift(f); }

template <class S>
Series<S> from_rational(const Series<Rational>& f);
template <>
inline Series<Rational> from_rational<Rational>(const Series<Rational>& f) { return f; }
template <>
inline Series<ModP> from_rational<ModP>(const Series<Rational>& f) { return to_mod_p(f, f.ring()); }

/// Tr^*(a) for a polynomial a in x_1..x_p whose cyclic norm is symmetric:
///   Tr^*(a) = sum_j Tr^*(omega_j) a_j(c_1..c_p) + (r/p) Tr^*(1) c_p^m,
/// where r sigma_p^m is the pure sigma_p part of N(a).  That part is
/// r/p times the norm of rho^*(c_p^m), so Frobenius reciprocity gives the
/// last term; r is checked to be divisible by p.
template <class S>
TransferExpression<S> transfer_of_norm_symmetric(const Series<S>& a, const TransferTheory<S>& th,
                                                 const std::string& label = "Tr*(a)") {
  const int p = th.ring.p;
  const auto xs = positions(a.vars(), indexed_names("x_", p));
  const auto ss = positions(*th.table, indexed_names("c_", p));
  const Series<Rational> ar = lift_series(a);
  const auto dec = decompose_norm_symmetric(ar, xs, th.table, ss);

  TransferExpression<S> out{"pi-cover", label, Series<S>(th.ring, th.table), {}, std::nullopt};
  out.omega_coeffs.push_back(Series<S>(th.ring, th.table));
  for (int j = 1; j < p; ++j) {
    const Series<S> aj = from_rational<S>(dec.a[j]);
    out.omega_coeffs.push_back(aj);
    out.value += th.tr_omega[j] * aj;
  }
  for (const auto& [m, c] : dec.sigma_p_part.terms()) {
    if (!mpz_divisible_ui_p(c.get_num_mpz_t(), static_cast<unsigned long>(p)))
      throw ConsistencyError("pure sigma_p part of the norm is not divisible by p");
  }
  const Series<S> e = from_rational<S>(dec.sigma_p_part * Rational(1, p));
  out.euler_coeff = e;
  out.value += th.tr_one * e;
  out.value = th.normalize(out.value);
  return out;
}

/// Tr^*(x^k) = Tr^*(x^{k-1}) c_1 - Tr^*(x^{k-2}) c_2, p = 2.
template <class S>
TransferExpression<S> transfer_x_power_p2(int k, const TransferTheory<S>& th) {
  if (th.ring.p != 2) throw ValidationError("the x-power recurrence is for p = 2");
  if (k < 1) throw ValidationError("k must be >= 1");
  const Series<S> c1 = Series<S>::variable(th.ring, th.table, "c_1");
  const Series<S> c2 = Series<S>::variable(th.ring, th.table, "c_2");
  Series<S> prev = th.tr_one, cur = th.tr_omega[1];
  for (int i = 2; i <= k; ++i) {
    Series<S> next = th.normalize(cur * c1 - prev * c2);
    prev = std::move(cur);
    cur = std::move(next);
  }
  return {"pi-cover", "Tr*(x^" + std::to_string(k) + ")", cur, {}, std::nullopt};
}

/// rho^*: c -> 0, c_1 -> x + t, c_2 -> x t (p = 2), landing in {x, t, generators}.
template <class S>
Series<S> rho_star_p2(const Series<S>& f) {
  const auto& ring = f.ring();
  std::vector<Variable> v{series_var("x"), series_var("t")};
  append_generators(v, ring);
  const TablePtr tt = make_table(std::move(v));
  const Series<S> x = Series<S>::variable(ring, tt, "x"), t = Series<S>::variable(ring, tt, "t");
  const std::size_t ci = f.vars().index("c");
  return substitute(f.at_zero(ci), {{"c_1", x + t}, {"c_2", x * t}, {"c", Series<S>(ring, tt)}}, tt,
                    std::nullopt);
}

}  // namespace chern
