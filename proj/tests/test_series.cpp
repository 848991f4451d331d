#include <gtest/gtest.h>

#include <random>

#include "chern/series.hpp"

using namespace chern;

namespace {

const CoefficientRing kQ = make_ring(RingKind::BPRational, 2, 2);

TablePtr xz_table(std::optional<int> xcap = std::nullopt) {
  std::vector<Variable> v{series_var("x", 2, xcap), series_var("z")};
  append_generators(v, kQ);
  return make_table(std::move(v));
}

Series<Rational> random_poly(std::mt19937& rng, const TablePtr& t, int deg) {
  std::uniform_int_distribution<int> coeff(-5, 5);
  Series<Rational> f(kQ, t);
  for (int e = 0; e <= deg; ++e) {
    const int c = coeff(rng);
    if (c) f += Series<Rational>::monomial(kQ, t, {{"x", e}}, c);
  }
  return f;
}

}  // namespace

TEST(Series, MultiplicationMatchesDenseConvolution) {
  std::mt19937 rng(11);
  const TablePtr t = xz_table();
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_poly(rng, t, 9), b = random_poly(rng, t, 7);
    std::vector<Rational> da(10), db(8), dc(17);
    const std::size_t xi = t->index("x");
    for (const auto& [m, c] : a.terms()) da[m[xi]] = c;
    for (const auto& [m, c] : b.terms()) db[m[xi]] = c;
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 8; ++j) dc[i + j] += da[i] * db[j];
    const auto prod = a * b;
    for (int e = 0; e < 17; ++e) EXPECT_EQ(prod.coefficient({{"x", e}}), dc[e]);
  }
}

TEST(Series, TruncationAndCaps) {
  const TablePtr t = xz_table(3);
  const auto x = Series<Rational>::variable(kQ, t, "x", 5);
  const auto z = Series<Rational>::variable(kQ, t, "z", 5);
  const auto f = (x + z).pow(6);
  EXPECT_TRUE(f.is_zero());  // total weight 6 exceeds the bound 5
  const auto g = (x + z).truncated(10).pow(4);
  EXPECT_EQ(g.coefficient({{"x", 2}, {"z", 2}}), 6);
  EXPECT_EQ(g.coefficient({{"x", 3}, {"z", 1}}), 0);  // x^3 is capped away
  EXPECT_EQ(g.coefficient({{"z", 4}}), 1);
}

TEST(Series, GeneratorsCarryDegreeButNoWeight) {
  const TablePtr t = xz_table();
  const auto f = Series<Rational>::monomial(kQ, t, {{"v_1", 3}, {"x", 2}}, 1L, 2);
  EXPECT_FALSE(f.is_zero());
  EXPECT_EQ(f.homogeneous_degree(), -2);
}

// Lagrange inversion: the compositional inverse of x + x^2 has
// coefficients (-1)^{n-1} Catalan(n-1).
TEST(Series, ReversionMatchesLagrangeInversion) {
  const TablePtr t = xz_table();
  const int order = 14;
  const auto x = Series<Rational>::variable(kQ, t, "x", order);
  const auto g = reversion(x + x * x, "x");
  for (int n = 1; n <= order; ++n) {
    const mpz_class catalan = binomial(2 * (n - 1), n - 1) / n;
    EXPECT_EQ(g.coefficient({{"x", n}}), Rational((n % 2 ? 1 : -1) * catalan)) << n;
  }
  const auto back = substitute(x + x * x, {{"x", g}}, t, order);
  EXPECT_EQ(back, x);
}

TEST(Series, SubstitutionComposes) {
  const TablePtr t = xz_table();
  const auto x = Series<Rational>::variable(kQ, t, "x", 8);
  const auto z = Series<Rational>::variable(kQ, t, "z", 8);
  const auto f = x * x + x * z;
  const auto h = substitute(f, {{"x", x + z}}, t, 8);
  EXPECT_EQ(h, (x + z) * (x + z) + (x + z) * z);
}

TEST(Series, ReversionRejectsBadInput) {
  const TablePtr t = xz_table();
  const auto x = Series<Rational>::variable(kQ, t, "x", 6);
  const auto z = Series<Rational>::variable(kQ, t, "z", 6);
  EXPECT_THROW(reversion(x * 2, "x"), ValidationError);
  EXPECT_THROW(reversion(x + z * x, "x"), ValidationError);
}

TEST(Series, DivisionAndCoefficientExtraction) {
  const TablePtr t = xz_table();
  const auto x = Series<Rational>::variable(kQ, t, "x");
  const auto z = Series<Rational>::variable(kQ, t, "z");
  const auto f = x * x * z + x * x * x;
  const std::size_t xi = t->index("x");
  EXPECT_EQ(f.divide_by_power(xi, 2), z + x);
  EXPECT_THROW(f.divide_by_power(xi, 3), ConsistencyError);
  EXPECT_EQ(f.coefficient_of(xi, 3), Series<Rational>::constant(kQ, t, 1L));
}

// Reducing by a series relation is idempotent and kills the relation.
TEST(Quotient, ReduceIsIdempotent) {
  std::vector<Variable> v{series_var("z", 2, 9)};
  append_generators(v, kQ);
  const TablePtr t = make_table(std::move(v));
  const auto z = Series<Rational>::variable(kQ, t, "z");
  const auto v1 = Series<Rational>::variable(kQ, t, "v_1");
  const auto rel = z * 2 - v1 * z * z;  // [2](z) for the Hazewinkel law, to low order
  const auto q = QuotientSpec::series_relation("z", rel);
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> c(-3, 3);
  for (int trial = 0; trial < 20; ++trial) {
    Series<Rational> f(kQ, t);
    for (int e = 0; e < 9; ++e) f += z.pow(e) * Rational(c(rng)) + z.pow(e) * v1 * Rational(c(rng));
    const auto r = reduce(f, q);
    EXPECT_EQ(reduce(r, q), r);
    // reduced terms have z-exponent 0, or coefficients in {0,1} at the leading slot
    EXPECT_TRUE(reduce(f - r, q).is_zero());
  }
  EXPECT_TRUE(reduce(rel, q).is_zero());
  EXPECT_TRUE(reduce(rel * z * z, q).is_zero());
  EXPECT_THROW(QuotientSpec::series_relation("z", rel * 3), ValidationError);
}

TEST(Quotient, Nilpotence) {
  std::vector<Variable> v{series_var("c"), series_var("z")};
  append_generators(v, kQ);
  const TablePtr t = make_table(std::move(v));
  const auto c = Series<Rational>::variable(kQ, t, "c");
  const auto z = Series<Rational>::variable(kQ, t, "z");
  const auto q = QuotientSpec::nilpotence("c", 3);
  EXPECT_EQ(reduce(c.pow(2) + c.pow(3) * z, q), c.pow(2));
}

TEST(Printing, CanonicalStrings) {
  const TablePtr t = xz_table();
  const auto x = Series<Rational>::variable(kQ, t, "x");
  const auto z = Series<Rational>::variable(kQ, t, "z");
  const auto v2 = Series<Rational>::variable(kQ, t, "v_2");
  EXPECT_EQ(to_string(z * v2 * 3 - x * Rational(1, 2)), "3*v_2*z - 1/2*x");
  EXPECT_EQ(to_string(Series<Rational>(kQ, t)), "0");
}
