#include <gtest/gtest.h>

#include <numeric>

#include "chern/groups.hpp"
#include "chern/io.hpp"

using namespace chern;

namespace {

// Burnside count of rotation orbits on N^p tuples, minus the N diagonal
// ones, plus the p^s N diagonal classes.
mpz_class burnside_rank(int p, int s, int n) {
  const long N = ipow(p, n * s);
  mpz_class fixed = 0;
  for (int r = 0; r < p; ++r) {
    mpz_class t;
    mpz_ui_pow_ui(t.get_mpz_t(), static_cast<unsigned long>(N), static_cast<unsigned long>(std::gcd(r, p)));
    fixed += t;
  }
  const mpz_class orbits = fixed / p;
  return mpz_class(ipow(p, s) * N) + orbits - N;
}

TablePtr z_table_for(const CoefficientRing& ring) { return univariate_table(ring, "z"); }

}  // namespace

TEST(Quillen, CyclicGroupsInMorava) {
  const auto k = morava_fgl(3, 2, 10);
  EXPECT_EQ(quillen_euler(k, 3, 8), Series<ModP>::monomial(k.ring, z_table_for(k.ring), {{"v_2", 1}, {"z", 8}}, 1L, 8));
  EXPECT_EQ(to_string(quillen_euler(k, 1, 8)), "1");
  EXPECT_EQ(to_string(quillen_euler(k, 2, 0)), "2");
  EXPECT_THROW(quillen_euler(k, 3, 20), ValidationError);
  EXPECT_THROW(quillen_euler(k, 0, 2), ValidationError);
}

TEST(Quillen, AgreesWithIteratedSum) {
  const auto bp = bp_fgl(2, 3, 9);
  const TablePtr t = z_table_for(bp.ring);
  for (int q : {2, 3, 5, 6}) {
    const auto direct = q_series(bp, q, t, 9).divide_by_power(t->index("z"), 1).truncated(8);
    EXPECT_EQ(quillen_euler(bp, q, 8), direct) << q;
  }
  const auto e2 = quillen_euler(bp, 2, 3);
  EXPECT_EQ(e2.coefficient({{"z", 1}, {"v_1", 1}}), -1);
  EXPECT_EQ(e2.coefficient({{"z", 3}, {"v_2", 1}}), -7);
}

TEST(Quillen, Products) {
  const auto k = morava_fgl(3, 2, 10);
  const auto e = product_euler(k, {3, 3}, 8);
  EXPECT_EQ(to_string(e), "v_2^2*z_1^8*z_2^8");
  EXPECT_THROW(product_euler(k, {}, 8), ValidationError);
}

TEST(SymmetricGroup, NilpotenceAndEulerClass) {
  EXPECT_EQ(sigma_p_nilpotence(3, 2), 5);
  EXPECT_EQ(sigma_p_nilpotence(5, 3), 32);
  EXPECT_EQ(sigma_p_nilpotence(2, 1), 2);
  const auto e = sigma_p_euler(3, 2);
  EXPECT_EQ(to_string(e), "2*v_2*y^4");
  EXPECT_EQ(e.homogeneous_degree(), 0);
  const auto r = sigma_p_presentation(5, 3);
  EXPECT_EQ(r.rank, mpz_class(32));
  EXPECT_EQ(r.data.at("Tr*(1)"), "4*v_3*y^31");
}

TEST(SymmetricGroup, EulerClassFromBP) {
  for (auto [p, s] : std::vector<std::pair<int, int>>{{2, 1}, {2, 2}, {3, 1}, {3, 2}, {5, 1}}) {
    const auto r = bp_sigma_p_relation_check(p, s);
    EXPECT_TRUE(r.well_formed) << p << "," << s;
    EXPECT_TRUE(r.matches) << p << "," << s << ": " << r.pi_side << " vs " << r.sigma_side;
  }
  EXPECT_THROW(bp_sigma_p_relation_check(3, 4), ValidationError);
}

TEST(Wreath, RankMatchesBurnsideAndEnumeration) {
  for (auto [p, s, n] : std::vector<std::tuple<int, int, int>>{
           {2, 1, 1}, {2, 1, 2}, {3, 1, 1}, {2, 2, 1}, {2, 1, 3}, {3, 2, 1}, {5, 1, 1}}) {
    const auto b = wreath_basis(p, s, n);
    EXPECT_EQ(b.formula_rank, burnside_rank(p, s, n)) << p << s << n;
    ASSERT_TRUE(b.enumerated_rank.has_value());
    EXPECT_EQ(mpz_class(*b.enumerated_rank), b.formula_rank) << p << s << n;
  }
  EXPECT_EQ(wreath_basis(2, 1, 1).formula_rank, 5);
  EXPECT_EQ(wreath_basis(3, 1, 1).formula_rank, 17);
  EXPECT_EQ(wreath_basis(2, 1, 2).formula_rank, 14);
  EXPECT_FALSE(wreath_basis(7, 3, 2).enumerated_rank.has_value());
}

TEST(Wreath, EulerClasses) {
  const auto w = wreath_euler(2, 1, 1);
  EXPECT_EQ(to_string(w.value), "v_1^3*c*c_2");
  ASSERT_TRUE(w.euler_coeff.has_value());
  EXPECT_EQ(to_string(*w.euler_coeff), "v_1^2*c_2");
  EXPECT_EQ(to_string(wreath_euler(3, 1, 1).value), "v_1^4*c^2*c_3^2");
  EXPECT_EQ(to_string(wreath_euler(2, 2, 1).value), "v_1^7*c*c_2^3");
  for (auto [p, n, s] : std::vector<std::tuple<int, int, int>>{{2, 1, 1}, {3, 1, 1}, {2, 2, 1}, {3, 1, 2}}) {
    const auto e = wreath_euler(p, n, s);
    EXPECT_EQ(e.value.homogeneous_degree(0), 0);
    EXPECT_TRUE(annihilated_by_c(e, morava_theory(SigmaExpansion(p, s))));
  }
  EXPECT_THROW(wreath_euler(2, 0, 1), ValidationError);
}

TEST(Semidirect, EulerClasses) {
  const auto e = semidirect_euler(2, 1, 1);
  EXPECT_EQ(to_string(e.value), "v_1*c_1 + v_1*c + v_1^3*c*c_2 + v_1^5*c*c_2^2");
  for (auto [p, n, s] : std::vector<std::tuple<int, int, int>>{{3, 1, 1}, {3, 2, 1}, {5, 2, 1}, {3, 1, 2}}) {
    const auto x = semidirect_euler(p, n, s);
    EXPECT_EQ(x.value.homogeneous_degree(0), 0) << p << n << s;
    EXPECT_TRUE(annihilated_by_c(x, morava_theory(SigmaExpansion(p, s))));
  }
  EXPECT_EQ(semidirect_euler(3, 3, 1).value, wreath_euler(3, 1, 1).value);
  EXPECT_EQ(semidirect_unit(5, 2).value(), 2u);  // 10/5
  EXPECT_THROW(semidirect_euler(3, 4, 1), ValidationError);
  EXPECT_THROW(semidirect_unit(3, 3), ValidationError);
}

TEST(Presentations, WreathData) {
  const auto r = wreath_presentation(2, 1, 1);
  EXPECT_EQ(r.rank, mpz_class(5));
  EXPECT_EQ(r.data.at("Tr*(1)"), "v_1^3*c*c_2");
  EXPECT_EQ(r.unknowns.size(), 2u);
  ASSERT_TRUE(r.basis.has_value());
  EXPECT_EQ(r.basis->size(), 5u);
}
