#pragma once

// Elementary symmetric polynomials, cyclic orbit sums omega_k, norms over
// Z/p and Sigma_p, and rewriting of symmetric polynomials in elementary ones.
//
// The functions here act on a chosen list of table positions ("the x's");
// every other variable of the table is treated as part of the coefficient.

#include <algorithm>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "chern/series.hpp"

namespace chern {

inline std::vector<std::string> indexed_names(const std::string& prefix, int n) {
  std::vector<std::string> out;
  for (int i = 1; i <= n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

inline std::vector<std::size_t> positions(const VariableTable& t,
                                          const std::vector<std::string>& names) {
  std::vector<std::size_t> out;
  for (const auto& n : names) out.push_back(t.index(n));
  return out;
}

/// Table {x_1..x_n, generators}, optional common cap on the x's.
inline TablePtr symmetric_table(const CoefficientRing& ring, int n,
                                std::optional<int> cap = std::nullopt,
                                const std::string& prefix = "x_") {
  std::vector<Variable> vars;
  for (const auto& name : indexed_names(prefix, n)) vars.push_back(series_var(name, 2, cap));
  append_generators(vars, ring);
  return make_table(std::move(vars));
}

/// sigma_k in the variables at `xs`.
template <class S>
Series<S> elementary(int k, const CoefficientRing& ring, const TablePtr& t,
                     const std::vector<std::size_t>& xs, std::optional<int> bound = std::nullopt) {
  const int n = static_cast<int>(xs.size());
  if (k < 0 || k > n)
    throw ValidationError("elementary: k=" + std::to_string(k) + " outside 0.." + std::to_string(n));
  Series<S> out(ring, t, bound);
  std::vector<int> pick(n, 0);
  std::fill(pick.end() - k, pick.end(), 1);
  do {
    Monomial m;
    for (int i = 0; i < n; ++i) m[xs[i]] = static_cast<Exponent>(pick[i]);
    out.add_term(m, out.scalar(1));
  } while (std::next_permutation(pick.begin(), pick.end()));
  return out;
}

template <class S>
Series<S> elementary(int k, int n, const CoefficientRing& ring, const TablePtr& t) {
  return elementary<S>(k, ring, t, positions(*t, indexed_names("x_", n)));
}

// ---------------------------------------------------------------------------
// Cyclic orbits

struct OrbitBasis {
  int p = 0;
  int k = 0;
  /// One sorted 0-based index set per cyclic orbit, the lexicographically
  /// least member of its orbit.
  std::vector<std::vector<int>> representatives;
};

inline std::vector<int> cyclic_shift(std::vector<int> s, int r, int p) {
  for (int& i : s) i = (i + r) % p;
  std::sort(s.begin(), s.end());
  return s;
}

/// Orbits of k-subsets of {0..p-1} under the cyclic shift.
inline OrbitBasis omega(int p, int k) {
  if (!is_prime(p)) throw ValidationError("omega: p must be prime");
  if (k < 1 || k > p - 1)
    throw ValidationError("omega: k must lie in 1..p-1 (orbits at k=0,p are not free)");
  OrbitBasis b{p, k, {}};
  std::set<std::vector<int>> seen;
  std::vector<int> pick(p, 0);
  std::fill(pick.begin(), pick.begin() + k, 1);  // lexicographic order of subsets
  std::vector<std::vector<int>> subsets;
  do {
    std::vector<int> s;
    for (int i = 0; i < p; ++i)
      if (pick[i]) s.push_back(i);
    subsets.push_back(s);
  } while (std::prev_permutation(pick.begin(), pick.end()));
  std::sort(subsets.begin(), subsets.end());
  for (const auto& s : subsets) {
    if (seen.count(s)) continue;
    b.representatives.push_back(s);
    for (int r = 0; r < p; ++r) {
      auto img = cyclic_shift(s, r, p);
      if (r > 0 && img == s) throw ConsistencyError("omega: non-free orbit");
      seen.insert(img);
    }
  }
  const mpz_class expected = binomial(p, k) / p;
  if (mpz_class(static_cast<unsigned long>(b.representatives.size())) != expected)
    throw ConsistencyError("omega: orbit count mismatch");
  return b;
}

/// omega_n(l): sum over representatives of prod x_i^l.
template <class S>
Series<S> omega_series(const OrbitBasis& b, const CoefficientRing& ring, const TablePtr& t,
                       const std::vector<std::size_t>& xs, int l = 1) {
  if (l < 1) throw ValidationError("omega power must be >= 1");
  if (static_cast<int>(xs.size()) != b.p) throw ValidationError("omega: need p variables");
  Series<S> out(ring, t);
  for (const auto& rep : b.representatives) {
    Monomial m;
    for (int i : rep) m[xs[i]] = static_cast<Exponent>(l);
    out.add_term(m, out.scalar(1));
  }
  return out;
}

template <class S>
Series<S> omega_power(int p, int n, int l, const CoefficientRing& ring, const TablePtr& t) {
  return omega_series<S>(omega(p, n), ring, t, positions(*t, indexed_names("x_", p)), l);
}

// ---------------------------------------------------------------------------
// Norms

enum class NormGroup { Cyclic, Symmetric };

template <class S>
Series<S> permute_vars(const Series<S>& f, const std::vector<std::size_t>& xs,
                       const std::vector<int>& sigma) {
  // x_i -> x_{sigma(i)}
  std::vector<std::size_t> perm(f.vars().size());
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = 0; i < xs.size(); ++i) perm[xs[i]] = xs[sigma[i]];
  return f.permuted(perm);
}

template <class S>
Series<S> norm(NormGroup g, const Series<S>& f, const std::vector<std::size_t>& xs) {
  const int p = static_cast<int>(xs.size());
  if (p < 1) throw ValidationError("norm: no variables");
  for (const auto& [m, c] : f.terms())
    for (std::size_t i = 0; i < f.vars().size(); ++i)
      if (m[i] != 0 && !f.vars()[i].generator &&
          std::find(xs.begin(), xs.end(), i) == xs.end())
        throw ValidationError("norm: input involves a variable outside the permuted set");
  Series<S> out(f.ring(), f.table(), f.bound());
  std::vector<int> sigma(p);
  std::iota(sigma.begin(), sigma.end(), 0);
  if (g == NormGroup::Cyclic) {
    for (int r = 0; r < p; ++r) {
      std::vector<int> shift(p);
      for (int i = 0; i < p; ++i) shift[i] = (i + r) % p;
      out += permute_vars(f, xs, shift);
    }
  } else {
    do out += permute_vars(f, xs, sigma);
    while (std::next_permutation(sigma.begin(), sigma.end()));
  }
  return out;
}

template <class S>
bool is_symmetric(const Series<S>& f, const std::vector<std::size_t>& xs) {
  const int n = static_cast<int>(xs.size());
  if (n < 2) return true;
  std::vector<int> swap(n), cycle(n);
  std::iota(swap.begin(), swap.end(), 0);
  std::swap(swap[0], swap[1]);
  for (int i = 0; i < n; ++i) cycle[i] = (i + 1) % n;
  return permute_vars(f, xs, swap) == f && permute_vars(f, xs, cycle) == f;
}

template <class S>
bool is_cyclic_invariant(const Series<S>& f, const std::vector<std::size_t>& xs) {
  const int n = static_cast<int>(xs.size());
  std::vector<int> cycle(n);
  for (int i = 0; i < n; ++i) cycle[i] = (i + 1) % n;
  return permute_vars(f, xs, cycle) == f;
}

// ---------------------------------------------------------------------------
// Elementary decomposition

/// g with g(sigma_1..sigma_n) = f, written in the target table where the
/// positions `ss` stand for sigma_1..sigma_n.  Every other variable of f is
/// carried into the target by name.  Greedy leading-term elimination in
/// lexicographic order of the x-exponents.
template <class S>
Series<S> express_in_elementary(const Series<S>& f, const std::vector<std::size_t>& xs,
                                const TablePtr& target, const std::vector<std::size_t>& ss) {
  const std::size_t n = xs.size();
  if (ss.size() != n) throw ValidationError("express_in_elementary: arity mismatch");
  if (!is_symmetric(f, xs)) throw ValidationError("express_in_elementary: input not symmetric");
  const auto& src = f.vars();
  std::vector<std::size_t> rename(src.size(), kMaxVariables);
  for (std::size_t i = 0; i < src.size(); ++i)
    if (std::find(xs.begin(), xs.end(), i) == xs.end())
      if (auto j = target->find(src[i].name)) rename[i] = *j;

  std::vector<Series<S>> sigma;
  for (std::size_t k = 1; k <= n; ++k)
    sigma.push_back(elementary<S>(static_cast<int>(k), f.ring(), f.table(), xs, f.bound()));
  std::map<std::pair<std::size_t, int>, Series<S>> sigma_pow;
  auto spow = [&](std::size_t k, int e) -> const Series<S>& {
    auto it = sigma_pow.find({k, e});
    if (it == sigma_pow.end()) it = sigma_pow.emplace(std::make_pair(k, e), sigma[k].pow(e)).first;
    return it->second;
  };

  Series<S> work = f;
  Series<S> out(f.ring(), target);
  while (!work.is_zero()) {
    std::vector<int> lead;
    for (const auto& [m, c] : work.terms()) {
      std::vector<int> e(n);
      for (std::size_t i = 0; i < n; ++i) e[i] = m[xs[i]];
      if (lead.empty() || e > lead) lead = e;
    }
    for (std::size_t i = 0; i + 1 < n; ++i)
      if (lead[i] < lead[i + 1])
        throw ConsistencyError("express_in_elementary: leading exponent not a partition");
    Series<S> coeff(f.ring(), f.table());
    for (const auto& [m, c] : work.terms()) {
      bool match = true;
      for (std::size_t i = 0; i < n && match; ++i) match = m[xs[i]] == lead[i];
      if (!match) continue;
      Monomial rest = m;
      for (std::size_t i : xs) rest[i] = 0;
      coeff.add_term(rest, c);
    }
    Series<S> prod = coeff;
    Monomial smono;
    for (std::size_t k = 0; k < n; ++k) {
      const int e = lead[k] - (k + 1 < n ? lead[k + 1] : 0);
      if (e == 0) continue;
      prod = prod * spow(k, e);
      smono[ss[k]] = static_cast<Exponent>(e);
    }
    work -= prod;
    for (const auto& [m, c] : coeff.terms()) {
      Monomial t = smono;
      for (std::size_t i = 0; i < src.size(); ++i) {
        if (m[i] == 0) continue;
        if (rename[i] == kMaxVariables)
          throw ValidationError("express_in_elementary: variable " + src[i].name +
                                " missing in target");
        t[rename[i]] = static_cast<Exponent>(t[rename[i]] + m[i]);
      }
      out.add_term(t, c);
    }
  }
  return out;
}

/// Evaluate g(sigma_1..sigma_n) back in the x-variables.
template <class S>
Series<S> evaluate_elementary(const Series<S>& g, const std::vector<std::string>& s_names,
                              const TablePtr& x_table, const std::vector<std::size_t>& xs) {
  std::map<std::string, Series<S>> assign;
  for (std::size_t k = 0; k < s_names.size(); ++k)
    assign.emplace(s_names[k], elementary<S>(static_cast<int>(k + 1), g.ring(), x_table, xs));
  return substitute(g, assign, x_table, std::nullopt);
}

/// N_pi(a) = sigma_1 a_1 + ... + sigma_{p-1} a_{p-1} + (pure sigma_p part).
template <class S>
struct NormDecomposition {
  std::vector<Series<S>> a;  // a[j] for j = 1..p-1; a[0] unused
  Series<S> sigma_p_part;    // polynomial in sigma_p alone (incl. constants)
};

/// Cyclic norm of a, rewritten in the target positions `ss` (sigma_1..p),
/// then split greedily: each sigma-monomial goes to the smallest j < p with
/// a positive exponent.
template <class S>
NormDecomposition<S> decompose_norm_symmetric(const Series<S>& a,
                                              const std::vector<std::size_t>& xs,
                                              const TablePtr& target,
                                              const std::vector<std::size_t>& ss) {
  const Series<S> na = norm(NormGroup::Cyclic, a, xs);
  if (!is_symmetric(na, xs))
    throw ValidationError("decompose_norm_symmetric: norm of input is not symmetric");
  const Series<S> g = express_in_elementary(na, xs, target, ss);
  const std::size_t p = xs.size();
  NormDecomposition<S> d{std::vector<Series<S>>(p, Series<S>(a.ring(), target)),
                         Series<S>(a.ring(), target)};
  for (const auto& [m, c] : g.terms()) {
    std::size_t j = p;
    for (std::size_t k = 0; k + 1 < p; ++k)
      if (m[ss[k]] > 0) {
        j = k;
        break;
      }
    if (j == p) {
      d.sigma_p_part.add_term(m, c);
      continue;
    }
    Monomial r = m;
    r[ss[j]] = static_cast<Exponent>(r[ss[j]] - 1);
    d.a[j + 1].add_term(r, c);
  }
  return d;
}

}  // namespace chern
