#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "mcsa/diagnostics.hpp"
#include "support.hpp"

using namespace mcsa;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

TargetModel standard_target(int d) {
  return TargetModel::gaussian(FullGaussian(Vector::Zero(d), Matrix::Identity(d, d)));
}

VariationalParams offset_params(int d) {
  return VariationalParams(Vector::LinSpaced(d, -0.5, 0.7), Vector::LinSpaced(d, 0.2, -0.1));
}

bool bit_equal(const Vector& a, const Vector& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace

TEST(Methods, NamesRoundTrip) {
  for (auto m : {Method::Msc, Method::MscRb, Method::Jsa, Method::Pmcsa, Method::Elbo})
    EXPECT_EQ(parse_method(method_name(m)), m);
  EXPECT_EQ(parse_method("CISRB"), Method::MscRb);
  EXPECT_EQ(parse_method("PIMH"), Method::Pmcsa);
  EXPECT_EQ(parse_method("CIS"), Method::Msc);
  EXPECT_FALSE(parse_method("SVGD").has_value());
}

TEST(MscStep, GradientDimensionAndBudget) {
  const auto target = standard_target(3);
  const Proposal proposal(DefensiveMixture::matched(offset_params(3)));
  Rng rng(1);
  const KernelContext ctx{target, proposal, rng};
  MscState state{Vector::Zero(3)};
  for (int n : {2, 5, 17}) EXPECT_EQ(msc_step(ctx, state, n).grad.size(), 6);
  EXPECT_THROW(msc_step(ctx, state, 1), std::invalid_argument);
  EXPECT_THROW({ MscRbState s{Vector::Zero(3)}; msc_rb_step(ctx, s, 1); }, std::invalid_argument);
}

TEST(MscStep, DominatingRetainedWeight) {
  const Vector z_prev = Vector::Constant(2, -0.75);
  TargetModel target;
  target.dim = 2;
  target.log_density = [z_prev](const Vector& z) {
    return -0.5 * z.squaredNorm() + (z == z_prev ? std::log(1e30) : 0.0);
  };
  const auto params = offset_params(2);
  const Proposal proposal(params);
  Rng rng(2);
  const KernelContext ctx{target, proposal, rng};
  const Vector expected = -score_diag(params, z_prev);
  for (int i = 0; i < 100; ++i) {
    MscState s{z_prev};
    const auto est = msc_step(ctx, s, 8);
    EXPECT_EQ(s.z, z_prev);
    EXPECT_TRUE(bit_equal(est.grad, expected));
    MscRbState rb{z_prev};
    EXPECT_LT((msc_rb_step(ctx, rb, 8).grad - expected).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(MscRbStep, EqualWeightsGiveSimpleAverage) {
  const int d = 2;
  const auto params = VariationalParams::standard(d);
  const auto target = standard_target(d);
  const Proposal proposal(params);  // q == pi
  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    Rng replay = rng;
    MscRbState state{Vector::Constant(d, 0.1 * rep)};
    const Vector z_prev = state.z;
    const auto est = msc_rb_step(KernelContext{target, proposal, rng}, state, 6);
    const auto cis = cis_step(KernelContext{target, proposal, replay}, z_prev, 5);
    Vector avg = Vector::Zero(2 * d);
    for (const auto& c : cis.candidates) avg -= score_diag(params, c);
    avg /= 6.0;
    EXPECT_LT((est.grad - avg).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(state.z, cis.next_state);
  }
}

TEST(MscRbStep, ConvexHullOfCandidateScores) {
  const int d = 3;
  const auto params = offset_params(d);
  const auto target = standard_target(d);
  const Proposal proposal(DefensiveMixture::matched(params));
  Rng rng(4);
  MscRbState state{Vector::Zero(d)};
  for (int rep = 0; rep < 200; ++rep) {
    Rng replay = rng;
    const Vector z_prev = state.z;
    const auto est = msc_rb_step(KernelContext{target, proposal, rng}, state, 9);
    const auto cis = cis_step(KernelContext{target, proposal, replay}, z_prev, 8);
    Vector lo = Vector::Constant(2 * d, std::numeric_limits<double>::infinity());
    Vector hi = -lo;
    for (const auto& c : cis.candidates) {
      const Vector g = -score_diag(params, c);
      lo = lo.cwiseMin(g);
      hi = hi.cwiseMax(g);
    }
    for (int k = 0; k < 2 * d; ++k) {
      EXPECT_GE(est.grad[k], lo[k] - 1e-12);
      EXPECT_LE(est.grad[k], hi[k] + 1e-12);
    }
    ASSERT_TRUE(est.ess.has_value());
    EXPECT_GE(*est.ess, 1.0 - 1e-12);
    EXPECT_LE(*est.ess, 9.0 + 1e-12);
  }
}

TEST(JsaStep, AllRejectedGivesRetainedScore) {
  TargetModel target;
  target.dim = 1;
  target.log_density = [](const Vector& z) { return z[0] > 40.0 ? 0.0 : kNegInf; };
  const auto params = offset_params(1);
  const Proposal proposal(params);
  Rng rng(5);
  const KernelContext ctx{target, proposal, rng};
  const Vector z_prev = Vector::Constant(1, 41.0);
  JsaState state{z_prev};
  const auto est = jsa_step(ctx, state, 16);
  EXPECT_EQ(est.accepted, 0);
  EXPECT_EQ(est.transitions, 16);
  EXPECT_EQ(est.acceptance_rate(), 0.0);
  EXPECT_EQ(state.z, z_prev);
  EXPECT_LT((est.grad + score_diag(params, z_prev)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(JsaStep, SingleStepMatchesImh) {
  const auto target = standard_target(2);
  const auto params = offset_params(2);
  const Proposal proposal(DefensiveMixture::matched(params));
  Rng a(6), b(6);
  JsaState state{Vector::Zero(2)};
  Vector z = state.z;
  for (int i = 0; i < 500; ++i) {
    const auto est = jsa_step(KernelContext{target, proposal, a}, state, 1);
    z = imh_step(KernelContext{target, proposal, b}, z).next_state;
    ASSERT_TRUE(bit_equal(state.z, z));
    ASSERT_TRUE(bit_equal(est.grad, -score_diag(params, z)));
  }
}

TEST(PmcsaStep, SingleChainMatchesJsa) {
  const auto target = standard_target(2);
  const auto params = offset_params(2);
  const Proposal proposal(DefensiveMixture::matched(params));
  const std::uint64_t seed = 77;
  auto pm = make_pmcsa_state({Vector::Zero(2)}, seed);
  JsaState jsa{Vector::Zero(2)};
  Rng jsa_rng = Rng::stream(seed, {0});
  Rng unused(0);
  for (int i = 0; i < 500; ++i) {
    const auto g1 = pmcsa_step(KernelContext{target, proposal, unused}, pm, 1).grad;
    const auto g2 = jsa_step(KernelContext{target, proposal, jsa_rng}, jsa, 1).grad;
    ASSERT_TRUE(bit_equal(g1, g2));
  }
}

TEST(PmcsaStep, ChainCountMustMatchBudget) {
  const auto target = standard_target(1);
  const Proposal proposal(VariationalParams::standard(1));
  Rng rng(8);
  auto state = make_pmcsa_state({Vector::Zero(1), Vector::Zero(1)}, 1);
  EXPECT_THROW(pmcsa_step(KernelContext{target, proposal, rng}, state, 3), std::invalid_argument);
}

TEST(PmcsaStep, PermutingChainsLeavesGradientUnchanged) {
  const int n = 16;
  const auto target = standard_target(3);
  const auto params = offset_params(3);
  const Proposal proposal(DefensiveMixture::matched(params));
  Rng rng(9);
  std::vector<Vector> chains;
  for (int i = 0; i < n; ++i) chains.push_back(sample_diag(params, rng));
  auto forward = make_pmcsa_state(chains, 99);
  PmcsaState reversed = forward;
  std::reverse(reversed.chains.begin(), reversed.chains.end());
  std::reverse(reversed.streams.begin(), reversed.streams.end());
  const auto g1 = pmcsa_step(KernelContext{target, proposal, rng}, forward, n);
  const auto g2 = pmcsa_step(KernelContext{target, proposal, rng}, reversed, n);
  EXPECT_LT((g1.grad - g2.grad).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(g1.accepted, g2.accepted);
  for (int i = 0; i < n; ++i) EXPECT_EQ(forward.chains[i], reversed.chains[n - 1 - i]);
}

TEST(PmcsaStep, VarianceScalesAsOneOverN) {
  const auto target = standard_target(1);
  const Proposal proposal(VariationalParams(Vector::Constant(1, 0.5), Vector::Constant(1, 0.2)));
  Rng rng(10);
  const KernelContext ctx{target, proposal, rng};
  const Vector z0 = Vector::Zero(1);
  const double v8 = conditional_variance(Method::Pmcsa, ctx, z0, 8, 10'000).variance;
  const double v64 = conditional_variance(Method::Pmcsa, ctx, z0, 64, 10'000).variance;
  const double ratio = v8 / v64;
  EXPECT_GE(ratio, 6.0);
  EXPECT_LE(ratio, 10.7);
}

TEST(ElboStep, ZeroAtOptimum) {
  const int d = 4;
  const auto params = offset_params(d);
  const auto target = TargetModel::gaussian(FullGaussian::from_diag(params));
  const Proposal proposal(params);
  Rng rng(11);
  const KernelContext ctx{target, proposal, rng};
  for (int i = 0; i < 1000; ++i) {
    const auto est = elbo_step(ctx, 3);
    ASSERT_EQ(est.grad.size(), 2 * d);
    ASSERT_LT(est.grad.cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ElboStep, MeanGradientPullsTowardTarget) {
  const auto target = standard_target(1);
  Rng rng(12);
  // With unit scale every draw equals mu; the second scale gives a noisy check.
  for (double log_sigma : {0.0, -0.35})
  for (double mu : {-1.5, 0.0, 0.8}) {
    const Proposal proposal(VariationalParams(Vector::Constant(1, mu), Vector::Constant(1, log_sigma)));
    const KernelContext ctx{target, proposal, rng};
    double sum = 0.0, sum_sq = 0.0;
    const int draws = 100'000;
    for (int i = 0; i < draws; ++i) {
      const double g = elbo_step(ctx, 1).grad[0];
      sum += g;
      sum_sq += g * g;
    }
    const double mean = sum / draws;
    const double se = std::sqrt(std::max(0.0, sum_sq / draws - mean * mean) / draws);
    EXPECT_LE(std::abs(mean - mu), 4.0 * se + 1e-9);
  }
}

TEST(ElboStep, RequiresTargetGradient) {
  TargetModel target;
  target.dim = 1;
  target.log_density = [](const Vector& z) { return -0.5 * z.squaredNorm(); };
  const Proposal proposal(VariationalParams::standard(1));
  Rng rng(13);
  EXPECT_THROW(elbo_step(KernelContext{target, proposal, rng}, 1), std::invalid_argument);
}

TEST(Stationarity, MeanGradientMatchesClosedForm) {
  for (auto m : {Method::Msc, Method::MscRb, Method::Jsa, Method::Pmcsa}) {
    const auto check = test_support::stationarity_check(m, 4, 20'000, 14);
    EXPECT_LT(check.max_abs_z, 4.0) << method_name(m);
  }
}

TEST(InitChainState, PmcsaHasOneChainPerBudget) {
  const Proposal proposal(VariationalParams::standard(2));
  Rng rng(15);
  auto state = init_chain_state(Method::Pmcsa, proposal, 12, rng, 3);
  const auto& pm = std::get<PmcsaState>(state);
  EXPECT_EQ(pm.chains.size(), 12u);
  EXPECT_EQ(pm.streams.size(), 12u);
  EXPECT_TRUE(std::holds_alternative<ElboState>(init_chain_state(Method::Elbo, proposal, 4, rng, 3)));
}
