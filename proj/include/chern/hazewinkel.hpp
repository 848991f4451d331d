#pragma once

// Change of basis between the logarithm coefficients m_n and the Hazewinkel
// generators v_n of BP_*, and the p-local integrality test.
//
//   v_n = p m_n - sum_{i=1}^{n-1} m_i v_{n-i}^{p^i}

#include <string>
#include <vector>

#include "chern/series.hpp"

namespace chern {

/// Table holding m_1..m_N followed by v_1..v_N, all as generators.
inline TablePtr hazewinkel_table(const CoefficientRing& ring) {
  if (ring.is_morava()) throw ValidationError("Hazewinkel generators need a BP ring");
  std::vector<Variable> vars;
  append_generators(vars, ring, 'm');
  append_generators(vars, ring, 'v');
  return make_table(std::move(vars));
}

namespace detail {

inline void check_generator_index(int n, int limit) {
  if (n < 1 || n > limit)
    throw ValidationError("generator index " + std::to_string(n) + " out of range 1.." +
                          std::to_string(limit));
}

}  // namespace detail

/// m_n written in v_1..v_N.  Indices above N are allowed: v_k for k > N is
/// taken to be zero, which is the image of m_n in Z_(p)[v_1..v_N]
/// (a ring quotient, not a truncation).
inline Series<Rational> m_from_v_extended(int n, const CoefficientRing& ring,
                                          const TablePtr& table) {
  if (n < 1) throw ValidationError("m_n needs n >= 1");
  const long p = ring.p;
  std::vector<Series<Rational>> m;  // m[k] for k = 0..n, m[0] = 1
  m.push_back(Series<Rational>::constant(ring, table, 1L));
  auto v = [&](int k) {
    if (k > ring.num_generators) return Series<Rational>(ring, table);
    return Series<Rational>::variable(ring, table, "v_" + std::to_string(k));
  };
  for (int k = 1; k <= n; ++k) {
    Series<Rational> acc = v(k);
    for (int i = 1; i < k; ++i) acc += m[i] * v(k - i).pow(static_cast<int>(ipow(p, i)));
    m.push_back(acc * Rational(1, p));
  }
  return m[n];
}

inline Series<Rational> m_from_v(int n, const CoefficientRing& ring, const TablePtr& table) {
  detail::check_generator_index(n, ring.num_generators);
  return m_from_v_extended(n, ring, table);
}

/// v_n written in m_1..m_n.
inline Series<Rational> v_from_m(int n, const CoefficientRing& ring, const TablePtr& table) {
  detail::check_generator_index(n, ring.num_generators);
  const long p = ring.p;
  std::vector<Series<Rational>> v{Series<Rational>(ring, table)};
  for (int k = 1; k <= n; ++k) {
    Series<Rational> acc =
        Series<Rational>::variable(ring, table, "m_" + std::to_string(k)) * Rational(p);
    for (int i = 1; i < k; ++i)
      acc -= Series<Rational>::variable(ring, table, "m_" + std::to_string(i)) *
             v[k - i].pow(static_cast<int>(ipow(p, i)));
    v.push_back(acc);
  }
  return v[n];
}

/// Rewrite every m_n in f through m_from_v.  The target table is f's table
/// with the m-generators replaced by v-generators.
inline Series<Rational> to_v_basis(const Series<Rational>& f, const TablePtr& target) {
  const auto& t = f.vars();
  const TablePtr h = hazewinkel_table(f.ring());
  std::map<std::string, Series<Rational>> assign;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& name = t[i].name;
    if (t[i].generator && name.rfind("m_", 0) == 0) {
      const int n = std::stoi(name.substr(2));
      assign.emplace(name, m_from_v(n, f.ring(), h).remapped(target, std::nullopt));
    }
  }
  return substitute(f, assign, target, f.bound());
}

/// True iff every scalar of f is p-integral.  f must be in the v-basis.
inline bool integrality_check(const Series<Rational>& f, long p) {
  const auto& t = f.vars();
  for (const auto& [m, c] : f.terms()) {
    for (std::size_t i = 0; i < t.size(); ++i)
      if (m[i] != 0 && t[i].generator && t[i].name.rfind("m_", 0) == 0)
        throw ValidationError("integrality_check: input still contains " + t[i].name);
    if (!is_p_integral(c, p)) return false;
  }
  return true;
}

}  // namespace chern
