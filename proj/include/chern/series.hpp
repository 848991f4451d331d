#pragma once

// Sparse truncated multivariate power series over a graded coefficient ring.
//
// A series lives in a VariableTable that lists both the series variables
// (x, z, c_k, ...) and the ring generators (m_n, v_n, v_s).  A term is an
// exponent vector over the whole table together with a scalar; generator
// exponents therefore carry the "monomial" half of a graded scalar.
//
// Truncation is explicit: every series carries an optional weight bound and
// the table carries per-variable exponent caps.  A term is dropped when its
// weight sum exceeds the bound or any capped exponent reaches its cap.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "chern/coefficients.hpp"

namespace chern {

inline constexpr std::size_t kMaxVariables = 20;
using Exponent = std::int16_t;

struct Monomial {
  std::array<Exponent, kMaxVariables> e{};

  Exponent operator[](std::size_t i) const { return e[i]; }
  Exponent& operator[](std::size_t i) { return e[i]; }

  Monomial& operator*=(const Monomial& o) {
    for (std::size_t i = 0; i < kMaxVariables; ++i) e[i] = static_cast<Exponent>(e[i] + o.e[i]);
    return *this;
  }
  friend Monomial operator*(Monomial a, const Monomial& b) { return a *= b; }
  friend auto operator<=>(const Monomial&, const Monomial&) = default;
  friend bool operator==(const Monomial&, const Monomial&) = default;

  bool is_one() const {
    return std::all_of(e.begin(), e.end(), [](Exponent x) { return x == 0; });
  }
};

struct MonomialHash {
  std::size_t operator()(const Monomial& m) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (Exponent x : m.e) {
      h ^= static_cast<std::uint16_t>(x);
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

struct Variable {
  std::string name;
  int degree = 2;               // topological degree
  int weight = 1;               // contribution to the truncation weight
  std::optional<int> cap;       // exponent must stay below cap
  bool generator = false;       // ring generator (negative degree, weight 0)
};

/// Ordered list of named variables.  Immutable once shared.
class VariableTable {
 public:
  explicit VariableTable(std::vector<Variable> vars) : vars_(std::move(vars)) {
    if (vars_.size() > kMaxVariables)
      throw ValidationError("too many variables (max " + std::to_string(kMaxVariables) + ")");
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      const auto& v = vars_[i];
      if (v.name.empty()) throw ValidationError("empty variable name");
      for (std::size_t j = 0; j < i; ++j)
        if (vars_[j].name == v.name) throw ValidationError("duplicate variable " + v.name);
      if (!v.generator && (v.degree <= 0 || v.degree % 2 != 0))
        throw ValidationError("series variable " + v.name + " needs even positive degree");
      if (v.generator && v.weight != 0)
        throw ValidationError("generator " + v.name + " must have weight 0");
      if (v.cap && *v.cap < 1) throw ValidationError("cap must be positive");
      if (v.cap) capped_.push_back(i);
    }
  }

  std::size_t size() const { return vars_.size(); }
  const Variable& operator[](std::size_t i) const { return vars_[i]; }
  const std::vector<Variable>& vars() const { return vars_; }
  const std::vector<std::size_t>& capped() const { return capped_; }

  std::optional<std::size_t> find(const std::string& name) const {
    for (std::size_t i = 0; i < vars_.size(); ++i)
      if (vars_[i].name == name) return i;
    return std::nullopt;
  }
  std::size_t index(const std::string& name) const {
    auto i = find(name);
    if (!i) throw ValidationError("unknown variable " + name);
    return *i;
  }

  int degree(const Monomial& m) const {
    int d = 0;
    for (std::size_t i = 0; i < vars_.size(); ++i) d += m[i] * vars_[i].degree;
    return d;
  }
  int weight(const Monomial& m) const {
    int w = 0;
    for (std::size_t i = 0; i < vars_.size(); ++i) w += m[i] * vars_[i].weight;
    return w;
  }
  bool within_caps(const Monomial& m) const {
    for (std::size_t i : capped_)
      if (m[i] >= *vars_[i].cap) return false;
    return true;
  }

  friend bool operator==(const VariableTable& a, const VariableTable& b) {
    if (a.vars_.size() != b.vars_.size()) return false;
    for (std::size_t i = 0; i < a.vars_.size(); ++i) {
      const auto &x = a.vars_[i], &y = b.vars_[i];
      if (x.name != y.name || x.degree != y.degree || x.weight != y.weight ||
          x.cap != y.cap || x.generator != y.generator)
        return false;
    }
    return true;
  }

 private:
  std::vector<Variable> vars_;
  std::vector<std::size_t> capped_;
};

using TablePtr = std::shared_ptr<const VariableTable>;

inline TablePtr make_table(std::vector<Variable> vars) {
  return std::make_shared<const VariableTable>(std::move(vars));
}

/// Series variable with weight = degree / 2.
inline Variable series_var(std::string name, int degree = 2,
                           std::optional<int> cap = std::nullopt) {
  return Variable{std::move(name), degree, degree / 2, cap, false};
}
/// Series variable that only a cap truncates.
inline Variable capped_var(std::string name, int degree, int cap) {
  return Variable{std::move(name), degree, 0, cap, false};
}
inline Variable generator_var(const GeneratorInfo& g) {
  return Variable{g.name, g.degree, 0, std::nullopt, true};
}
inline void append_generators(std::vector<Variable>& vars, const CoefficientRing& ring,
                              char basis = 'v') {
  for (const auto& g : ring.generators(basis)) vars.push_back(generator_var(g));
}

inline std::optional<int> combine_bounds(std::optional<int> a, std::optional<int> b) {
  if (a && b) return std::min(*a, *b);
  return a ? a : b;
}

template <class S>
class Series {
 public:
  using Terms = std::map<Monomial, S>;

  Series(CoefficientRing ring, TablePtr vars, std::optional<int> bound = std::nullopt)
      : ring_(std::move(ring)), vars_(std::move(vars)), bound_(bound) {
    if (!vars_) throw ValidationError("null variable table");
  }

  static Series constant(const CoefficientRing& ring, TablePtr vars, S c,
                         std::optional<int> bound = std::nullopt) {
    Series s(ring, std::move(vars), bound);
    s.add_term(Monomial{}, std::move(c));
    return s;
  }
  static Series constant(const CoefficientRing& ring, TablePtr vars, long c,
                         std::optional<int> bound = std::nullopt) {
    return constant(ring, std::move(vars), scalar_from_int<S>(c, ring), bound);
  }
  static Series monomial(const CoefficientRing& ring, TablePtr vars,
                         const std::vector<std::pair<std::string, int>>& exps, S c,
                         std::optional<int> bound = std::nullopt) {
    Series s(ring, vars, bound);
    Monomial m;
    for (const auto& [name, e] : exps) m[vars->index(name)] = static_cast<Exponent>(m[vars->index(name)] + e);
    s.add_term(m, std::move(c));
    return s;
  }
  static Series monomial(const CoefficientRing& ring, TablePtr vars,
                         const std::vector<std::pair<std::string, int>>& exps, long c = 1,
                         std::optional<int> bound = std::nullopt) {
    return monomial(ring, vars, exps, scalar_from_int<S>(c, ring), bound);
  }
  static Series variable(const CoefficientRing& ring, TablePtr vars, const std::string& name,
                         std::optional<int> bound = std::nullopt) {
    return monomial(ring, std::move(vars), {{name, 1}}, 1L, bound);
  }

  const CoefficientRing& ring() const { return ring_; }
  const TablePtr& table() const { return vars_; }
  const VariableTable& vars() const { return *vars_; }
  std::optional<int> bound() const { return bound_; }
  const Terms& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }

  S scalar(long c) const { return scalar_from_int<S>(c, ring_); }
  S zero_scalar() const { return scalar(0); }

  /// Whether a term at m survives truncation.
  bool admits(const Monomial& m) const {
    if (!vars_->within_caps(m)) return false;
    if (bound_ && vars_->weight(m) > *bound_) return false;
    return true;
  }

  void add_term(const Monomial& m, const S& c) {
    if (chern::is_zero(c) || !admits(m)) return;
    auto [it, inserted] = terms_.try_emplace(m, c);
    if (!inserted) {
      it->second += c;
      if (chern::is_zero(it->second)) terms_.erase(it);
    }
  }

  S coefficient(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? zero_scalar() : it->second;
  }
  S coefficient(const std::vector<std::pair<std::string, int>>& exps) const {
    Monomial m;
    for (const auto& [n, e] : exps) m[vars_->index(n)] = static_cast<Exponent>(e);
    return coefficient(m);
  }

  /// Topological degree if all terms share one; nullopt otherwise.  The zero
  /// series is homogeneous of every degree and reports `fallback`.
  std::optional<int> homogeneous_degree(std::optional<int> fallback = std::nullopt) const {
    if (terms_.empty()) return fallback;
    const int d = vars_->degree(terms_.begin()->first);
    for (const auto& [m, c] : terms_)
      if (vars_->degree(m) != d) return std::nullopt;
    return d;
  }

  /// Minimal weight over the terms, or nullopt for zero.
  std::optional<int> min_weight() const {
    std::optional<int> w;
    for (const auto& [m, c] : terms_) {
      const int x = vars_->weight(m);
      if (!w || x < *w) w = x;
    }
    return w;
  }

  int max_exponent(std::size_t var) const {
    int e = 0;
    for (const auto& [m, c] : terms_) e = std::max<int>(e, m[var]);
    return e;
  }

  void require_compatible(const Series& o) const {
    if (!(ring_ == o.ring_))
      throw ValidationError("ring mismatch: " + ring_.describe() + " vs " + o.ring_.describe());
    if (vars_ != o.vars_ && !(*vars_ == *o.vars_))
      throw ValidationError("variable table mismatch");
  }

  Series& operator+=(const Series& o) {
    require_compatible(o);
    bound_ = combine_bounds(bound_, o.bound_);
    if (bound_) prune();
    for (const auto& [m, c] : o.terms_) add_term(m, c);
    return *this;
  }
  Series& operator-=(const Series& o) {
    require_compatible(o);
    bound_ = combine_bounds(bound_, o.bound_);
    if (bound_) prune();
    for (const auto& [m, c] : o.terms_) add_term(m, -c);
    return *this;
  }
  friend Series operator+(Series a, const Series& b) { return a += b; }
  friend Series operator-(Series a, const Series& b) { return a -= b; }
  Series operator-() const {
    Series r = *this;
    for (auto& [m, c] : r.terms_) c = -c;
    return r;
  }

  Series& operator*=(const S& k) {
    if (chern::is_zero(k)) {
      terms_.clear();
      return *this;
    }
    for (auto& [m, c] : terms_) c *= k;
    return *this;
  }
  friend Series operator*(Series a, const S& k) { return a *= k; }
  friend Series operator*(const S& k, Series a) { return a *= k; }
  Series scaled(long k) const { return *this * scalar(k); }

  /// Multiply by a single monomial (exponent shift) and scalar.
  Series shifted(const Monomial& m, const S& k) const {
    Series r(ring_, vars_, bound_);
    for (const auto& [t, c] : terms_) r.add_term(t * m, c * k);
    return r;
  }

  friend Series operator*(const Series& a, const Series& b) { return multiply(a, b); }
  Series& operator*=(const Series& o) { return *this = multiply(*this, o); }

  static Series multiply(const Series& a, const Series& b) {
    a.require_compatible(b);
    Series r(a.ring_, a.vars_, combine_bounds(a.bound_, b.bound_));
    if (a.terms_.empty() || b.terms_.empty()) return r;
    const auto& table = *a.vars_;
    struct Entry {
      const Monomial* m;
      const S* c;
      int w;
    };
    auto entries = [&](const Series& s) {
      std::vector<Entry> v;
      v.reserve(s.terms_.size());
      for (const auto& [m, c] : s.terms_) v.push_back({&m, &c, table.weight(m)});
      std::sort(v.begin(), v.end(), [](const Entry& x, const Entry& y) { return x.w < y.w; });
      return v;
    };
    const auto ea = entries(a);
    const auto eb = entries(b);
    const auto bound = r.bound_;
    const auto& capped = table.capped();
    std::unordered_map<Monomial, S, MonomialHash> acc;
    acc.reserve(std::min<std::size_t>(ea.size() * eb.size(), 1u << 20));
    for (const auto& x : ea) {
      if (bound && x.w + eb.front().w > *bound) break;
      for (const auto& y : eb) {
        if (bound && x.w + y.w > *bound) break;
        Monomial m = *x.m * *y.m;
        bool ok = true;
        for (std::size_t i : capped)
          if (m[i] >= *table[i].cap) {
            ok = false;
            break;
          }
        if (!ok) continue;
        auto [it, inserted] = acc.try_emplace(m, *x.c);
        if (inserted)
          it->second *= *y.c;
        else
          it->second += *x.c * *y.c;
      }
    }
    for (auto& [m, c] : acc)
      if (!chern::is_zero(c)) r.terms_.emplace(m, std::move(c));
    return r;
  }

  Series pow(int n) const {
    if (n < 0) throw ValidationError("negative power");
    Series result = constant(ring_, vars_, 1L, bound_);
    Series base = *this;
    while (n) {
      if (n & 1) result = result * base;
      n >>= 1;
      if (n) base = base * base;
    }
    return result;
  }

  /// Re-truncate to a (possibly smaller) bound.
  Series truncated(std::optional<int> bound) const {
    Series r(ring_, vars_, combine_bounds(bound_, bound));
    for (const auto& [m, c] : terms_) r.add_term(m, c);
    return r;
  }

  /// Keep only terms satisfying pred.
  template <class Pred>
  Series filtered(Pred pred) const {
    Series r(ring_, vars_, bound_);
    for (const auto& [m, c] : terms_)
      if (pred(m, c)) r.terms_.emplace(m, c);
    return r;
  }

  /// Coefficient of var^e as a series in the remaining variables.
  Series coefficient_of(std::size_t var, int e) const {
    Series r(ring_, vars_, bound_);
    for (const auto& [m, c] : terms_)
      if (m[var] == e) {
        Monomial t = m;
        t[var] = 0;
        r.terms_.emplace(t, c);
      }
    return r;
  }

  /// Exact division by var^e; throws if some term is not divisible.
  Series divide_by_power(std::size_t var, int e) const {
    Series r(ring_, vars_, bound_);
    for (const auto& [m, c] : terms_) {
      if (m[var] < e)
        throw ConsistencyError("series not divisible by " + (*vars_)[var].name + "^" +
                               std::to_string(e));
      Monomial t = m;
      t[var] = static_cast<Exponent>(t[var] - e);
      r.terms_.emplace(t, c);
    }
    return r;
  }

  /// Same terms in another table; variables are matched by name.  Variables
  /// absent from the target must have zero exponent.
  Series remapped(TablePtr target, std::optional<int> bound) const {
    std::vector<std::size_t> map(vars_->size());
    for (std::size_t i = 0; i < vars_->size(); ++i) {
      auto j = target->find((*vars_)[i].name);
      map[i] = j ? *j : kMaxVariables;
    }
    Series r(ring_, target, bound);
    for (const auto& [m, c] : terms_) {
      Monomial t;
      for (std::size_t i = 0; i < vars_->size(); ++i) {
        if (m[i] == 0) continue;
        if (map[i] == kMaxVariables)
          throw ValidationError("variable " + (*vars_)[i].name + " missing in target table");
        t[map[i]] = static_cast<Exponent>(t[map[i]] + m[i]);
      }
      r.add_term(t, c);
    }
    return r;
  }
  Series remapped(TablePtr target) const { return remapped(std::move(target), bound_); }

  /// Permute variable positions: term exponent at index i moves to perm[i].
  Series permuted(const std::vector<std::size_t>& perm) const {
    Series r(ring_, vars_, bound_);
    for (const auto& [m, c] : terms_) {
      Monomial t = m;
      for (std::size_t i = 0; i < perm.size(); ++i) t[perm[i]] = m[i];
      r.add_term(t, c);
    }
    return r;
  }

  /// Set a variable to zero.
  Series at_zero(std::size_t var) const {
    return filtered([var](const Monomial& m, const S&) { return m[var] == 0; });
  }

  friend bool operator==(const Series& a, const Series& b) {
    return a.ring_ == b.ring_ && (a.vars_ == b.vars_ || *a.vars_ == *b.vars_) &&
           a.terms_ == b.terms_;
  }

  /// Direct mutable access for algorithms that manage canonical form
  /// themselves (reduction).  Callers must not insert zero scalars.
  Terms& mutable_terms() { return terms_; }
  void set_bound(std::optional<int> b) {
    bound_ = b;
    prune();
  }

 private:
  void prune() {
    for (auto it = terms_.begin(); it != terms_.end();)
      it = admits(it->first) ? std::next(it) : terms_.erase(it);
  }

  CoefficientRing ring_;
  TablePtr vars_;
  std::optional<int> bound_;
  Terms terms_;
};

// ---------------------------------------------------------------------------
// Canonical order and printing

/// Canonical order: (series-variable degree, series exponents, generator
/// exponents), all ascending.
inline bool canonical_less(const VariableTable& t, const Monomial& a, const Monomial& b) {
  int da = 0, db = 0;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (!t[i].generator) {
      da += a[i] * t[i].degree;
      db += b[i] * t[i].degree;
    }
  if (da != db) return da < db;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (!t[i].generator && a[i] != b[i]) return a[i] < b[i];
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i].generator && a[i] != b[i]) return a[i] < b[i];
  return false;
}

template <class S>
std::vector<std::pair<Monomial, S>> canonical_terms(const Series<S>& s) {
  std::vector<std::pair<Monomial, S>> v(s.terms().begin(), s.terms().end());
  const auto& t = s.vars();
  std::sort(v.begin(), v.end(),
            [&](const auto& a, const auto& b) { return canonical_less(t, a.first, b.first); });
  return v;
}

inline std::string scalar_to_string(const Rational& q) { return q.get_str(); }
inline std::string scalar_to_string(const ModP& r) { return std::to_string(r.value()); }
inline bool scalar_is_one(const Rational& q) { return q == 1; }
inline bool scalar_is_one(const ModP& r) { return r.value() == 1; }
inline bool scalar_is_minus_one(const Rational& q) { return q == -1; }
inline bool scalar_is_minus_one(const ModP&) { return false; }

inline std::string monomial_to_string(const VariableTable& t, const Monomial& m,
                                      bool generators_first = true) {
  std::string out;
  auto emit = [&](std::size_t i) {
    if (m[i] == 0) return;
    if (!out.empty()) out += "*";
    out += t[i].name;
    if (m[i] != 1) out += "^" + std::to_string(m[i]);
  };
  if (generators_first) {
    for (std::size_t i = 0; i < t.size(); ++i)
      if (t[i].generator) emit(i);
    for (std::size_t i = 0; i < t.size(); ++i)
      if (!t[i].generator) emit(i);
  } else {
    for (std::size_t i = 0; i < t.size(); ++i) emit(i);
  }
  return out;
}

/// One term as "c*gens*vars", e.g. "2*v_2^2*y^3*s3^4".
template <class S>
std::string term_to_string(const VariableTable& t, const Monomial& m, const S& c) {
  const std::string mono = monomial_to_string(t, m);
  if (mono.empty()) return scalar_to_string(c);
  if (scalar_is_one(c)) return mono;
  if (scalar_is_minus_one(c)) return "-" + mono;
  return scalar_to_string(c) + "*" + mono;
}

template <class S>
std::string to_string(const Series<S>& s) {
  if (s.is_zero()) return "0";
  std::string out;
  for (const auto& [m, c] : canonical_terms(s)) {
    std::string t = term_to_string(s.vars(), m, c);
    if (out.empty())
      out = t;
    else if (t.front() == '-')
      out += " - " + t.substr(1);
    else
      out += " + " + t;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Substitution

/// Substitute series for variables.  Unassigned variables (including
/// generators) are carried into the target table by name.  Each assigned
/// series must already live in the target table.
template <class S>
std::ostream& operator<<(std::ostream& os, const Series<S>& s) {
  return os << to_string(s);
}

template <class S>
Series<S> substitute(const Series<S>& f, const std::map<std::string, Series<S>>& assignment,
                     TablePtr target, std::optional<int> bound) {
  const auto& src = f.vars();
  struct Slot {
    std::size_t src_index;
    const Series<S>* value;
    std::vector<Series<S>> powers;  // powers[e] = value^e, built lazily
  };
  std::vector<Slot> slots;
  std::vector<std::size_t> rename(src.size(), kMaxVariables);
  for (std::size_t i = 0; i < src.size(); ++i) {
    auto it = assignment.find(src[i].name);
    if (it != assignment.end()) {
      const auto& v = it->second;
      if (!(v.ring() == f.ring())) throw ValidationError("ring mismatch in substitution");
      if (v.table() != target && !(v.vars() == *target))
        throw ValidationError("substituted series for " + src[i].name + " not in target table");
      const bool infinite_slot = !src[i].generator && f.bound() && src[i].weight > 0;
      if (infinite_slot && !is_zero(v.coefficient(Monomial{})))
        throw ValidationError("substituting a series with constant term into truncated slot " +
                              src[i].name);
      slots.push_back({i, &v, {}});
    } else {
      auto j = target->find(src[i].name);
      if (j) rename[i] = *j;
    }
  }
  auto power = [&](Slot& slot, int e) -> const Series<S>& {
    if (e < 0) throw ValidationError("negative exponent on substituted variable");
    if (slot.powers.empty())
      slot.powers.push_back(Series<S>::constant(f.ring(), target, 1L, bound));
    while (static_cast<int>(slot.powers.size()) <= e)
      slot.powers.push_back(slot.powers.back() * slot.value->truncated(bound));
    return slot.powers[e];
  };

  // Group source terms by the exponents of substituted variables so each
  // distinct power product is computed once.
  std::map<std::vector<int>, Series<S>> groups;
  for (const auto& [m, c] : f.terms()) {
    std::vector<int> key;
    key.reserve(slots.size());
    for (const auto& sl : slots) key.push_back(m[sl.src_index]);
    Monomial rest;
    for (std::size_t i = 0; i < src.size(); ++i) {
      if (m[i] == 0) continue;
      bool substituted = false;
      for (const auto& sl : slots)
        if (sl.src_index == i) substituted = true;
      if (substituted) continue;
      if (rename[i] == kMaxVariables)
        throw ValidationError("variable " + src[i].name + " has no image in target table");
      rest[rename[i]] = static_cast<Exponent>(rest[rename[i]] + m[i]);
    }
    auto [it, inserted] = groups.try_emplace(key, Series<S>(f.ring(), target, std::nullopt));
    it->second.add_term(rest, c);
  }

  Series<S> result(f.ring(), target, bound);
  for (auto& [key, rest] : groups) {
    Series<S> prod = rest.truncated(bound);
    for (std::size_t k = 0; k < slots.size(); ++k) {
      if (key[k] == 0) continue;
      prod = prod * power(slots[k], key[k]);
      if (prod.is_zero()) break;
    }
    result += prod;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Reversion

/// Compositional inverse of a univariate f = x + O(x^2) in variable `var`
/// (other entries of the table must be generators).  Returns g with
/// f(g(x)) = x up to the truncation bound of f.
template <class S>
Series<S> reversion(const Series<S>& f, const std::string& var) {
  const auto& t = f.vars();
  const std::size_t xi = t.index(var);
  for (std::size_t i = 0; i < t.size(); ++i)
    if (i != xi && !t[i].generator)
      for (const auto& [m, c] : f.terms())
        if (m[i] != 0) throw ValidationError("reversion needs a univariate series");
  Monomial x1;
  x1[xi] = 1;
  if (!is_zero(f.coefficient(Monomial{})))
    throw ValidationError("reversion: nonzero constant term");
  const S lead = f.coefficient(x1);
  if (!scalar_is_one(lead)) throw ValidationError("reversion: coefficient of x must be 1");
  if (!f.bound() && !t[xi].cap)
    throw ValidationError("reversion needs an explicit truncation");

  // Higher part h = f - x, grouped by x-exponent.
  std::map<int, Series<S>> h;
  for (const auto& [m, c] : f.terms()) {
    if (m == x1) continue;
    if (m[xi] < 2) throw ValidationError("reversion: f must be x + O(x^2)");
    Monomial g = m;
    g[xi] = 0;
    auto [it, ins] = h.try_emplace(m[xi], Series<S>(f.ring(), f.table(), f.bound()));
    it->second.add_term(g, c);
  }
  const Series<S> x = Series<S>::variable(f.ring(), f.table(), var, f.bound());
  Series<S> g = x;
  // g <- x - h(g); each pass fixes at least one more degree.
  const int max_iter = (f.bound() ? *f.bound() : *t[xi].cap) + 2;
  for (int iter = 0; iter < max_iter; ++iter) {
    Series<S> next = x;
    Series<S> gp = Series<S>::constant(f.ring(), f.table(), 1L, f.bound());
    int e = 0;
    for (const auto& [k, coeff] : h) {
      while (e < k) {
        gp = gp * g;
        ++e;
      }
      next -= coeff * gp;
    }
    if (next == g) return g;
    g = std::move(next);
  }
  throw ConsistencyError("reversion did not stabilize");
}

// ---------------------------------------------------------------------------
// Quotient rewriting

/// Rewrite rules applied by reduce().
///
/// * Nilpotence: var^e -> 0.
/// * Series relation R(z) = q*z^m + (higher powers of z) = 0, q a prime
///   integer.  A term r*z^j (j >= m) is rewritten as r0*z^j - t*z^(j-m)*(R -
///   q*z^m) where r = r0 + q*t and r0 is the residue of r in [0, q).  This
///   eliminates the non-monic leading term without dividing by q.
struct QuotientSpec {
  struct Nilpotence {
    std::string var;
    int exponent;
  };
  struct Relation {
    std::string var;
    int lead_exponent;
    long lead_coefficient;
    Series<Rational> relation;
  };
  std::vector<Nilpotence> nilpotent;
  std::optional<Relation> relation;

  static QuotientSpec nilpotence(std::string var, int e) {
    QuotientSpec q;
    q.nilpotent.push_back({std::move(var), e});
    return q;
  }

  /// Build the relation rule from R, validating its shape.
  static QuotientSpec series_relation(const std::string& var, const Series<Rational>& r) {
    const auto& t = r.vars();
    const std::size_t zi = t.index(var);
    if (!t[zi].cap && !r.bound())
      throw ValidationError("relation rule on " + var +
                            " would not terminate: no cap or truncation bound");
    int lowest = -1;
    for (const auto& [m, c] : r.terms())
      if (lowest < 0 || m[zi] < lowest) lowest = m[zi];
    if (lowest < 1) throw ValidationError("relation must vanish at " + var + "=0");
    Monomial lead;
    lead[zi] = static_cast<Exponent>(lowest);
    const Rational q = r.coefficient(lead);
    for (const auto& [m, c] : r.terms())
      if (m[zi] == lowest && m != lead)
        throw ValidationError("relation leading part must be an integer times " + var + "^m");
    if (q.get_den() != 1 || !is_prime(q.get_num().get_si()))
      throw ValidationError("relation leading coefficient must be a prime integer");
    QuotientSpec s;
    s.relation = Relation{var, lowest, q.get_num().get_si(), r};
    return s;
  }
};

namespace detail {

template <class S>
Series<S> apply_nilpotence(const Series<S>& f, const QuotientSpec& q) {
  if (q.nilpotent.empty()) return f;
  std::vector<std::pair<std::size_t, int>> rules;
  for (const auto& n : q.nilpotent) rules.emplace_back(f.vars().index(n.var), n.exponent);
  return f.filtered([&](const Monomial& m, const S&) {
    for (const auto& [i, e] : rules)
      if (m[i] >= e) return false;
    return true;
  });
}

inline Series<Rational> apply_relation(const Series<Rational>& f, const QuotientSpec& q) {
  const auto& rel = *q.relation;
  const auto& t = f.vars();
  const std::size_t zi = t.index(rel.var);
  if (!t[zi].cap && !(f.bound() && t[zi].weight > 0))
    throw ValidationError("reduce: variable " + rel.var + " is neither capped nor truncated");
  const Series<Rational> tail_src =
      rel.relation.remapped(f.table(), f.bound())
          .filtered([&](const Monomial& m, const Rational&) { return m[zi] > rel.lead_exponent; });
  const long qn = rel.lead_coefficient;
  const auto uq = static_cast<unsigned long>(qn);

  struct Key {
    int z;
    Monomial m;
    bool operator<(const Key& o) const { return z != o.z ? z < o.z : m < o.m; }
  };
  std::map<Key, Rational> pending;
  for (const auto& [m, c] : f.terms()) pending.emplace(Key{m[zi], m}, c);
  Series<Rational> out(f.ring(), f.table(), f.bound());
  while (!pending.empty()) {
    auto it = pending.begin();
    const Monomial m = it->first.m;
    const Rational r = it->second;
    pending.erase(it);
    if (is_zero(r)) continue;
    if (m[zi] < rel.lead_exponent) {
      out.add_term(m, r);
      continue;
    }
    if (!is_p_integral(r, qn))
      throw ConsistencyError("coefficient " + r.get_str() + " not integral at " +
                             std::to_string(qn) + " in quotient reduction");
    const long num = static_cast<long>(mpz_fdiv_ui(r.get_num_mpz_t(), uq));
    const long den = static_cast<long>(mpz_fdiv_ui(r.get_den_mpz_t(), uq));
    const long r0 = static_cast<long>(
        ModP(num, static_cast<std::uint32_t>(qn)).operator*=(
            ModP(den, static_cast<std::uint32_t>(qn)).inverse()).value());
    const Rational tq = (r - r0) / qn;
    if (r0 != 0) out.add_term(m, Rational(r0));
    if (is_zero(tq)) continue;
    Monomial shift = m;
    shift[zi] = static_cast<Exponent>(shift[zi] - rel.lead_exponent);
    for (const auto& [tm, tc] : tail_src.terms()) {
      const Monomial nm = shift * tm;
      if (!out.admits(nm)) continue;
      auto [pit, ins] = pending.try_emplace(Key{nm[zi], nm}, -tq * tc);
      if (!ins) pit->second -= tq * tc;
    }
  }
  return out;
}

}  // namespace detail

/// Normal form of f modulo the rules in q.
template <class S>
Series<S> reduce(const Series<S>& f, const QuotientSpec& q) {
  Series<S> r = detail::apply_nilpotence(f, q);
  if (q.relation) {
    if constexpr (std::is_same_v<S, Rational>) {
      r = detail::apply_relation(r, q);
      r = detail::apply_nilpotence(r, q);
    } else {
      throw ValidationError("series relations are only supported over rational scalars");
    }
  }
  return r;
}

/// Reduce an element of the ring with a p-adic-style relation, used for
/// BP^*(BZ/p) = BP^*[[z]]/([p](z)).
template <class S>
Series<S> multiply_reduced(const Series<S>& a, const Series<S>& b, const QuotientSpec& q) {
  return reduce(a * b, q);
}

}  // namespace chern
