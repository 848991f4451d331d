#include <gtest/gtest.h>

#include <random>

#include "chern/coefficients.hpp"
#include "chern/transfer.hpp"

using namespace chern;

TEST(Arithmetic, PrimesAndBinomials) {
  EXPECT_TRUE(is_prime(2));
  EXPECT_TRUE(is_prime(97));
  EXPECT_FALSE(is_prime(1));
  EXPECT_FALSE(is_prime(91));
  EXPECT_EQ(binomial(5, 2), 10);
  EXPECT_EQ(binomial(7, 0), 1);
  EXPECT_EQ(binomial(3, 4), 0);
  EXPECT_EQ(ipow(3, 4), 81);
  EXPECT_EQ(factorial(5), 120);
}

TEST(ModP, FieldAxiomsOnRandomSamples) {
  std::mt19937 rng(7);
  for (std::uint32_t p : {2u, 3u, 5u, 7u, 31u}) {
    std::uniform_int_distribution<long> d(-200, 200);
    for (int t = 0; t < 200; ++t) {
      const ModP a(d(rng), p), b(d(rng), p), c(d(rng), p);
      EXPECT_EQ((a + b) * c, a * c + b * c);
      EXPECT_EQ(a - a, ModP(0, p));
      if (!is_zero(a)) {
        EXPECT_EQ(a * a.inverse(), ModP(1, p));
      }
    }
  }
  EXPECT_EQ(ModP(-1, 5).value(), 4u);
  EXPECT_THROW(ModP(0, 5).inverse(), ValidationError);
  EXPECT_THROW(ModP(1, 5) + ModP(1, 7), ValidationError);
}

TEST(ModP, ReductionOfRationals) {
  EXPECT_EQ(reduce_mod_p(Rational(1, 3), 5).value(), 2u);
  EXPECT_EQ(reduce_mod_p(Rational(-7, 2), 3).value(), 1u);
  EXPECT_THROW(reduce_mod_p(Rational(1, 5), 5), ConsistencyError);
  EXPECT_TRUE(is_p_integral(Rational(3, 4), 3));
  EXPECT_EQ(valuation(mpz_class(48), 2), 4);
}

TEST(Rings, ConstructionAndValidation) {
  const auto k = make_ring(RingKind::MoravaK, 3, 2);
  ASSERT_EQ(k.generators().size(), 1u);
  EXPECT_EQ(k.generators()[0].name, "v_2");
  EXPECT_EQ(k.generators()[0].degree, -16);
  const auto bp = make_ring(RingKind::BPInteger, 2, 3);
  ASSERT_EQ(bp.generators().size(), 3u);
  EXPECT_EQ(bp.generators()[2].degree, -14);
  EXPECT_EQ(bp.generators('m')[0].name, "m_1");
  EXPECT_THROW(make_ring(RingKind::MoravaK, 4, 1), ValidationError);
  EXPECT_THROW(make_ring(RingKind::MoravaK, 3, 0), ValidationError);
  EXPECT_THROW(make_ring(RingKind::MoravaK, 3, 20), ValidationError);
}

// p^{-1} binom(p, k) counts cyclic orbits of k-subsets; mod p it is
// (-1)^{k-1}/k.  Checked against the direct integer quotient.
TEST(Rings, OrbitCountResidue) {
  for (int p : {2, 3, 5, 7, 11})
    for (int k = 1; k < p; ++k) {
      const mpz_class direct = binomial(p, k) / p;
      const ModP expect = ModP(k % 2 ? 1 : -1, p) * ModP(k, p).inverse();
      EXPECT_EQ(ModP(mpz_class(direct % p).get_si(), p), expect) << p << " " << k;
      EXPECT_EQ(ModP(orbit_count_residue(p, k), p), expect);
    }
}
