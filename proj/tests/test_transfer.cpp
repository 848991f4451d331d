#include <gtest/gtest.h>

#include "chern/io.hpp"
#include "chern/transfer.hpp"
#include "reference_data.hpp"

using namespace chern;

namespace {

Series<ModP> formula_from_text(const std::string& text, const SigmaExpansion& e) {
  return parse_series<ModP>(text, e.ring(), sigma_formula_table(e.ring()));
}

const std::vector<std::pair<int, int>> kMoravaCases = {{2, 1}, {2, 2}, {2, 3}, {3, 1}, {3, 2},
                                                       {3, 3}, {5, 1}, {5, 2}, {5, 3}, {7, 1}};

}  // namespace

TEST(SigmaExpansion, SmallCaseP3S2) {
  const SigmaExpansion e(3, 2);
  for (std::size_t k = 0; k < reference::kSigmaP3S2.size(); ++k) {
    const auto row = morava_lambda(e, static_cast<int>(k + 1));
    ASSERT_TRUE(row.residual_zero);
    const auto expect = formula_from_text(reference::kSigmaP3S2[k], e);
    EXPECT_EQ(sigma_formula(row, e).value, expect) << "k=" << k + 1;
    EXPECT_EQ(evaluate_sigma_formula(expect, e), e.sigma(static_cast<int>(k + 1)));
  }
}

TEST(SigmaExpansion, LargeCaseP5S3) {
  const SigmaExpansion e(5, 3);
  for (std::size_t k = 0; k < reference::kSigmaP5S3.size(); ++k) {
    const auto row = morava_lambda(e, static_cast<int>(k + 1));
    ASSERT_TRUE(row.residual_zero);
    const auto expect = formula_from_text(reference::kSigmaP5S3[k], e);
    EXPECT_EQ(sigma_formula(row, e).value, expect) << "k=" << k + 1;
    EXPECT_EQ(evaluate_sigma_formula(expect, e), e.sigma(static_cast<int>(k + 1)));
  }
}

TEST(SigmaExpansion, Validation) {
  EXPECT_THROW(SigmaExpansion(3, 2, 10), ValidationError);
  EXPECT_THROW(SigmaExpansion(4, 1), ValidationError);
  const SigmaExpansion e(3, 1);
  EXPECT_THROW(morava_lambda(e, 0), ValidationError);
  EXPECT_THROW(morava_lambda(e, 3), ValidationError);
}

// The law's [i](z) may be replaced by i*z once z^{p^s} = 0.
TEST(SigmaExpansion, MultiplesAreLinearModuloNilpotence) {
  for (auto [p, s] : std::vector<std::pair<int, int>>{{2, 3}, {3, 2}, {5, 1}}) {
    const SigmaExpansion e(p, s);
    const auto z = Series<ModP>::variable(e.ring(), e.multiple(1).table(), "z");
    for (int i = 1; i < p; ++i) EXPECT_EQ(e.multiple(i), z * ModP(i, p)) << p << s << i;
  }
}

TEST(SigmaExpansion, ResidualVanishesEverywhere) {
  for (auto [p, s] : kMoravaCases) {
    const SigmaExpansion e(p, s);
    for (int k = 1; k < p; ++k) {
      const auto row = morava_lambda(e, k);
      EXPECT_TRUE(row.residual_zero) << p << "," << s << "," << k;
      EXPECT_TRUE(lambda_residual(e, k, row.lambda).is_zero());
    }
  }
}

// sigma_1 = v_s (z^{P-1} x + sum_{i<s} z^{P-p^i} sigma_p^{p^{i-1}}) for odd p.
TEST(SigmaExpansion, SigmaOneClosedFormOddPrimes) {
  for (auto [p, s] : std::vector<std::pair<int, int>>{{3, 2}, {3, 3}, {5, 2}, {3, 1}, {7, 1}}) {
    const SigmaExpansion e(p, s);
    EXPECT_EQ(e.sigma(1), sigma1_closed_form(e)) << p << "," << s;
  }
}

// At p = 2 the closed form misses the term z (sigma_1 = x + F(x,z) contains
// z even at x = 0).
TEST(SigmaExpansion, SigmaOneClosedFormAtTwo) {
  for (int s : {2, 3}) {
    const SigmaExpansion e(2, s);
    EXPECT_EQ(e.sigma(1) - sigma1_closed_form(e), e.monomial({{"z", 1}})) << s;
  }
}

TEST(Transfers, ClosedFormOfTrX) {
  for (auto [p, s] : std::vector<std::pair<int, int>>{{2, 2}, {2, 3}, {3, 1}, {3, 2}, {3, 3}, {5, 1}, {5, 2}, {7, 1}}) {
    const SigmaExpansion e(p, s);
    const auto solved = morava_transfer_omega(morava_lambda(e, 1), e.ring());
    EXPECT_EQ(solved.value, transfer_c1(p, s).value.remapped(solved.value.table())) << p << "," << s;
  }
  // (2,1): the solver finds two more terms.
  const SigmaExpansion e(2, 1);
  const auto solved = morava_transfer_omega(morava_lambda(e, 1), e.ring());
  const auto t = solved.value.table();
  const auto extra = Series<ModP>::monomial(e.ring(), t, {{"v_1", 2}, {"c", 1}, {"c_2", 1}}, 1L) +
                     Series<ModP>::monomial(e.ring(), t, {{"v_1", 4}, {"c", 1}, {"c_2", 2}}, 1L);
  EXPECT_EQ(solved.value - transfer_c1(2, 1).value.remapped(t), extra);
}

TEST(Transfers, SigmaCoverRescaling) {
  const SigmaExpansion e(3, 2);
  const auto row = morava_lambda(e, 1);
  const auto ct = morava_transfer_sigma(row, e.ring());
  EXPECT_EQ(ct.basis, "sigma-cover");
  EXPECT_EQ(ct.value.coefficient({{"c_1", 1}}).value(), 2u);  // 1! 2! = 2
}

TEST(Transfers, MoravaEulerClass) {
  const SigmaExpansion e(3, 2);
  const auto th = morava_theory(e);
  EXPECT_EQ(th.tr_one, Series<ModP>::monomial(e.ring(), th.table, {{"v_2", 1}, {"c", 8}}, 1L));
  // c^{p^s} = 0, so c Tr^*(1) = 0.
  EXPECT_TRUE((th.tr_one * Series<ModP>::variable(e.ring(), th.table, "c")).is_zero());
}

TEST(Transfers, NormSymmetricInputs) {
  const SigmaExpansion e(3, 1);
  const auto th = morava_theory(e);
  const TablePtr xt = symmetric_table(th.ring, 3);
  // x_1 x_2 x_3 = rho^*(c_3): Tr^* gives Tr^*(1) c_3.
  const auto a = parse_series<ModP>("x_1 x_2 x_3", th.ring, xt);
  const auto tr = transfer_of_norm_symmetric(a, th);
  EXPECT_EQ(tr.value, th.normalize(th.tr_one * Series<ModP>::variable(th.ring, th.table, "c_3")));
  // omega_1 = x_1: Tr^*(omega_1).
  const auto tx = transfer_of_norm_symmetric(parse_series<ModP>("x_1", th.ring, xt), th);
  EXPECT_EQ(tx.value, th.tr_omega[1]);
  EXPECT_THROW(transfer_of_norm_symmetric(parse_series<ModP>("x_1^2 x_2", th.ring, xt), th), ValidationError);
}

TEST(Transfers, PowersAtTwoAgreeWithNorms) {
  const SigmaExpansion e(2, 2);
  const auto th = morava_theory(e);
  const TablePtr xt = symmetric_table(th.ring, 2);
  // Beyond k = 2 the two routes differ by multiples of 2 Tr^*(x) - c_1 Tr^*(1),
  // which vanishes in cohomology but is not a rewrite rule here.
  const auto direct = transfer_of_norm_symmetric(parse_series<ModP>("x_1^2", th.ring, xt), th);
  EXPECT_EQ(transfer_x_power_p2(2, th).value, direct.value);
  for (int k = 1; k <= 5; ++k) {
    const auto rec = transfer_x_power_p2(k, th);
    const auto x = rho_star_p2(rec.value);
    const auto& tt = x.table();
    EXPECT_EQ(x, Series<ModP>::monomial(th.ring, tt, {{"x", k}}, 1L) +
                     Series<ModP>::monomial(th.ring, tt, {{"t", k}}, 1L));
  }
}

TEST(BPDelta, ChecksAndBaseCase) {
  const auto bd = bp_delta_p2(8, 2);
  EXPECT_TRUE(bd.base_case);
  EXPECT_TRUE(bd.residual_zero);
  EXPECT_TRUE(bd.annihilation);
  EXPECT_TRUE(bd.homogeneous);
  EXPECT_TRUE(bd.rho_consistent);
  EXPECT_EQ(bd.delta[0], Series<Rational>::monomial(bd.ring, bd.z_table, {{"z", 1}}, -1L));
  EXPECT_EQ(bd.delta[1].coefficient({{"z", 1}, {"v_1", 2}}), 1);
  EXPECT_EQ(bd.delta[1].coefficient({{"z", 2}, {"v_2", 1}}), 1);
}

TEST(BPDelta, StableUnderC2Order) {
  const auto a = bp_delta_p2(8, 1);
  const auto b = bp_delta_p2(8, 3);
  EXPECT_EQ(to_string(a.delta[1]), to_string(b.delta[1]));
}

// Image of delta_j in K(s)^*(BZ/2) is the Morava lambda_j.
TEST(BPDelta, MoravaImages) {
  const auto bd = bp_delta_p2(8, 4);
  for (int s = 1; s <= 3; ++s) {
    const SigmaExpansion e(2, s);
    const auto row = morava_lambda(e, 1);
    const int top = std::min<int>(4, static_cast<int>(row.lambda.size()) - 1);
    for (int j = 0; j <= top; ++j)
      EXPECT_EQ(bp_to_morava(bd.delta[j], s, e.z_table()), row.lambda[j]) << "s=" << s << " j=" << j;
  }
}

TEST(BPDelta, PowersAndRhoStar) {
  const auto th = bp2_theory(bp_delta_p2(6, 3));
  const TablePtr xt = symmetric_table(th.ring, 2);
  const auto direct = transfer_of_norm_symmetric(parse_series<Rational>("x_1^2", th.ring, xt), th);
  EXPECT_EQ(transfer_x_power_p2(2, th).value, direct.value);
  for (int k = 1; k <= 5; ++k) {
    const auto x = rho_star_p2(transfer_x_power_p2(k, th).value);
    const auto& tt = x.table();
    EXPECT_EQ(x, Series<Rational>::monomial(th.ring, tt, {{"x", k}}, 1L) +
                     Series<Rational>::monomial(th.ring, tt, {{"t", k}}, 1L))
        << k;
  }
}

// The additive law: [2](c) = 2c, and the solver's constant term is -c.
TEST(BPDelta, AdditiveMock) {
  const CoefficientRing ring = make_ring(RingKind::BPInteger, 2, 3);
  const TablePtr t = fgl_table(ring);
  FormalGroupLaw<Rational> add{ring, t,
                               Series<Rational>::variable(ring, t, "x", 30) + Series<Rational>::variable(ring, t, "y", 30),
                               30, "additive"};
  const auto bd = bp_delta_p2_with(add, 6, 2);
  EXPECT_EQ(bd.delta[0], Series<Rational>::monomial(ring, bd.z_table, {{"z", 1}}, -1L));
  EXPECT_TRUE(bd.residual_zero);
}

TEST(BPDelta, Validation) {
  EXPECT_THROW(transfer_x_power_p2(0, bp2_theory(bp_delta_p2(4, 1))), ValidationError);
  const SigmaExpansion e(3, 1);
  EXPECT_THROW(transfer_x_power_p2(2, morava_theory(e)), ValidationError);
}
