#pragma once

// Graded coefficient rings for Brown-Peterson and Morava K-theory.
//
// Scalars come in two flavours: exact rationals (BP kinds, backed by GMP)
// and residues mod p (Morava K(s)).  The polynomial generators m_n / v_n of
// the ring are not part of the scalar; they live as "generator" variables in
// a VariableTable so that a term of a series is (scalar, exponent vector over
// series variables and generators).

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <gmpxx.h>

namespace chern {

/// Thrown for malformed input: bad parameters, out-of-range indices,
/// mismatched rings.  The CLI maps it to exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when an internal identity that must hold fails (residual
/// equations, integrality).  The CLI maps it to exit code 3.
class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool is_prime(long n) {
  if (n < 2) return false;
  for (long d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

inline long ipow(long base, int exp) {
  long r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

inline mpz_class binomial(long n, long k) {
  mpz_class r;
  if (k < 0 || k > n) return 0;
  mpz_bin_uiui(r.get_mpz_t(), static_cast<unsigned long>(n),
               static_cast<unsigned long>(k));
  return r;
}

inline long factorial(int n) {
  long r = 1;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

// ---------------------------------------------------------------------------
// Scalars

using Rational = mpq_class;

/// Residue modulo a small prime.  The modulus travels with the value so that
/// arithmetic needs no global state.
class ModP {
 public:
  ModP() = default;
  ModP(long value, std::uint32_t p) : p_(p) {
    long r = value % static_cast<long>(p);
    if (r < 0) r += p;
    v_ = static_cast<std::uint32_t>(r);
  }

  std::uint32_t value() const { return v_; }
  std::uint32_t modulus() const { return p_; }

  ModP& operator+=(const ModP& o) {
    check(o);
    v_ = static_cast<std::uint32_t>((std::uint64_t{v_} + o.v_) % p_);
    return *this;
  }
  ModP& operator-=(const ModP& o) {
    check(o);
    v_ = static_cast<std::uint32_t>((std::uint64_t{v_} + p_ - o.v_) % p_);
    return *this;
  }
  ModP& operator*=(const ModP& o) {
    check(o);
    v_ = static_cast<std::uint32_t>((std::uint64_t{v_} * o.v_) % p_);
    return *this;
  }
  friend ModP operator+(ModP a, const ModP& b) { return a += b; }
  friend ModP operator-(ModP a, const ModP& b) { return a -= b; }
  friend ModP operator*(ModP a, const ModP& b) { return a *= b; }
  ModP operator-() const { return ModP(-static_cast<long>(v_), p_); }
  friend bool operator==(const ModP& a, const ModP& b) {
    return a.v_ == b.v_ && a.p_ == b.p_;
  }

  ModP inverse() const {
    if (v_ == 0) throw ValidationError("inverse of zero residue");
    // Fermat: p is prime.
    std::uint64_t r = 1, b = v_;
    std::uint32_t e = p_ - 2;
    while (e) {
      if (e & 1) r = r * b % p_;
      b = b * b % p_;
      e >>= 1;
    }
    return ModP(static_cast<long>(r), p_);
  }

 private:
  void check(const ModP& o) const {
    if (o.p_ != p_) throw ValidationError("residues with different moduli");
  }
  std::uint32_t v_ = 0;
  std::uint32_t p_ = 2;
};

inline bool is_zero(const Rational& q) { return sgn(q) == 0; }
inline bool is_zero(const ModP& r) { return r.value() == 0; }
inline Rational inverse(const Rational& q) {
  if (is_zero(q)) throw ValidationError("inverse of zero");
  return Rational(1) / q;
}
inline ModP inverse(const ModP& r) { return r.inverse(); }

/// p-adic valuation of a nonzero integer.
inline int valuation(mpz_class n, long p) {
  if (n == 0) throw ValidationError("valuation of zero");
  int v = 0;
  while (mpz_divisible_ui_p(n.get_mpz_t(), static_cast<unsigned long>(p))) {
    n /= p;
    ++v;
  }
  return v;
}

/// True iff the denominator of q is prime to p.
inline bool is_p_integral(const Rational& q, long p) {
  return !mpz_divisible_ui_p(q.get_den_mpz_t(), static_cast<unsigned long>(p));
}

/// Image of a p-integral rational in F_p.
inline ModP reduce_mod_p(const Rational& q, long p) {
  if (!is_p_integral(q, p))
    throw ConsistencyError("rational " + q.get_str() +
                           " is not p-integral for p=" + std::to_string(p));
  const auto up = static_cast<unsigned long>(p);
  const long num = static_cast<long>(mpz_fdiv_ui(q.get_num_mpz_t(), up));
  const long den = static_cast<long>(mpz_fdiv_ui(q.get_den_mpz_t(), up));
  const auto up32 = static_cast<std::uint32_t>(p);
  return ModP(num, up32) * ModP(den, up32).inverse();
}

/// Lift a residue to the integer representative in [0, p).
inline Rational lift(const ModP& r) { return Rational(static_cast<long>(r.value())); }

// ---------------------------------------------------------------------------
// Coefficient rings

enum class RingKind { BPRational, BPInteger, MoravaK };

inline std::string to_string(RingKind k) {
  switch (k) {
    case RingKind::BPRational: return "BPRational";
    case RingKind::BPInteger: return "BPInteger";
    case RingKind::MoravaK: return "MoravaK";
  }
  return "?";
}

struct GeneratorInfo {
  std::string name;
  int degree;  // topological (cohomological) degree, negative
};

/// Descriptor of a graded coefficient ring.  BP kinds carry N polynomial
/// generators; Morava K(s) carries the single Laurent generator v_s.
struct CoefficientRing {
  RingKind kind = RingKind::BPRational;
  int p = 2;
  int height = 0;          // s, MoravaK only
  int num_generators = 0;  // N, BP kinds only

  bool is_morava() const { return kind == RingKind::MoravaK; }

  /// deg m_n = deg v_n = -2(p^n - 1).
  int generator_degree(int n) const {
    return -2 * static_cast<int>(ipow(p, n) - 1);
  }

  /// Generators in the given basis ('m' or 'v').  MoravaK ignores the
  /// basis and returns v_s.
  std::vector<GeneratorInfo> generators(char basis = 'v') const {
    std::vector<GeneratorInfo> out;
    if (is_morava()) {
      out.push_back({"v_" + std::to_string(height), generator_degree(height)});
      return out;
    }
    for (int n = 1; n <= num_generators; ++n)
      out.push_back({std::string(1, basis) + "_" + std::to_string(n),
                     generator_degree(n)});
    return out;
  }

  std::string describe() const {
    if (is_morava())
      return "K(" + std::to_string(height) + ") p=" + std::to_string(p);
    return to_string(kind) + " p=" + std::to_string(p) +
           " N=" + std::to_string(num_generators);
  }

  friend bool operator==(const CoefficientRing&, const CoefficientRing&) = default;
};

inline CoefficientRing make_ring(RingKind kind, int p, int s_or_n) {
  if (!is_prime(p)) throw ValidationError("p=" + std::to_string(p) + " is not prime");
  if (s_or_n < 1)
    throw ValidationError(kind == RingKind::MoravaK ? "height s must be >= 1"
                                                    : "N must be >= 1");
  CoefficientRing r;
  r.kind = kind;
  r.p = p;
  if (kind == RingKind::MoravaK) {
    r.height = s_or_n;
    if (ipow(p, s_or_n) > 20000)
      throw ValidationError("p^s too large for this engine");
  } else {
    r.num_generators = s_or_n;
  }
  return r;
}

// Scalar construction from integers, uniform over both scalar types.
template <class S>
S scalar_from_int(long value, const CoefficientRing& ring);

template <>
inline Rational scalar_from_int<Rational>(long value, const CoefficientRing&) {
  return Rational(value);
}

template <>
inline ModP scalar_from_int<ModP>(long value, const CoefficientRing& ring) {
  return ModP(value, static_cast<std::uint32_t>(ring.p));
}

}  // namespace chern
