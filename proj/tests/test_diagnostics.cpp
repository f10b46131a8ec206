#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "mcsa/diagnostics.hpp"

using namespace mcsa;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// The one-dimensional setup: pi = N(0, 1), q = N(-shift, 2).
struct Simulation {
  TargetModel target = TargetModel::gaussian(FullGaussian(Vector::Zero(1), Matrix::Identity(1, 1)));
  VariationalParams params;
  Proposal proposal;
  explicit Simulation(double shift)
      : params(Vector::Constant(1, -shift), Vector::Constant(1, 0.5 * std::log(2.0))),
        proposal(params) {}
};

BoundInputs inputs(double L, double w_star, double chi2, int n) {
  BoundInputs b;
  b.L = L;
  b.w_star = w_star;
  b.chi2 = chi2;
  b.N = n;
  b.mu_norm_sq = 0.3;
  b.c_cov = 0.1;
  return b;
}

}  // namespace

TEST(TraceCovariance, KnownValues) {
  std::vector<Vector> xs{Vector::Constant(2, 1.0), Vector::Constant(2, 3.0)};
  Vector mean;
  EXPECT_DOUBLE_EQ(trace_covariance(xs, &mean), 4.0);
  EXPECT_EQ(mean, Vector::Constant(2, 2.0));
  std::vector<Vector> one{Vector::Zero(2)};
  EXPECT_THROW(trace_covariance(one), std::invalid_argument);
}

TEST(TraceCovariance, OrderInvariant) {
  Rng rng(1);
  std::vector<Vector> xs;
  for (int i = 0; i < 5000; ++i) {
    Vector v(3);
    for (int k = 0; k < 3; ++k) v[k] = 1e6 + rng.normal();
    xs.push_back(v);
  }
  const double forward = trace_covariance(xs);
  std::reverse(xs.begin(), xs.end());
  EXPECT_NEAR(trace_covariance(xs), forward, 1e-12 * forward);
  EXPECT_NEAR(forward, 3.0, 0.2);
}

TEST(ConditionalVariance, DegenerateEstimatorHasZeroVariance) {
  TargetModel target;
  target.dim = 1;
  target.log_density = [](const Vector& z) { return z[0] > 40.0 ? 0.0 : kNegInf; };
  const Proposal proposal(VariationalParams::standard(1));
  Rng rng(2);
  const KernelContext ctx{target, proposal, rng};
  for (auto m : {Method::Msc, Method::MscRb, Method::Jsa}) {
    const auto report = conditional_variance(m, ctx, Vector::Constant(1, 41.0), 8, 64);
    EXPECT_EQ(report.variance, 0.0) << method_name(m);
    EXPECT_EQ(report.num_samples, 64);
  }
}

TEST(ConditionalVariance, PmcsaNeedsExactTarget) {
  TargetModel target;
  target.dim = 1;
  target.log_density = [](const Vector& z) { return -0.5 * z.squaredNorm(); };
  const Proposal proposal(VariationalParams::standard(1));
  Rng rng(3);
  const KernelContext ctx{target, proposal, rng};
  EXPECT_THROW(conditional_variance(Method::Pmcsa, ctx, Vector::Zero(1), 4, 16),
               std::invalid_argument);
  EXPECT_THROW(conditional_variance(Method::Msc, ctx, Vector::Zero(1), 4, 1),
               std::invalid_argument);
}

TEST(ConditionalVariance, ThreadCountDoesNotChangeResult) {
  Simulation sim(2.0);
  for (auto m : {Method::Msc, Method::MscRb, Method::Jsa, Method::Pmcsa}) {
    Rng a(4), b(4);
    const auto r1 = conditional_variance(m, KernelContext{sim.target, sim.proposal, a},
                                         Vector::Zero(1), 16, 2000, 1);
    const auto r4 = conditional_variance(m, KernelContext{sim.target, sim.proposal, b},
                                         Vector::Zero(1), 16, 2000, 4);
    EXPECT_EQ(r1.variance, r4.variance) << method_name(m);
    EXPECT_EQ(r1.mean_grad, r4.mean_grad);
  }
}

TEST(ConditionalVariance, RaoBlackwellizedVarianceGrowsWithBudgetFarFromTarget) {
  Simulation sim(4.0);
  Rng rng(5);
  const KernelContext ctx{sim.target, sim.proposal, rng};
  const double v4 = conditional_variance(Method::MscRb, ctx, Vector::Zero(1), 4, 1 << 14).variance;
  const double v64 = conditional_variance(Method::MscRb, ctx, Vector::Zero(1), 64, 1 << 14).variance;
  EXPECT_GT(v64, v4);
}

TEST(ConditionalVariance, PmcsaBeatsSequentialKernelsFarFromTarget) {
  Simulation sim(4.0);
  Rng rng(6);
  const KernelContext ctx{sim.target, sim.proposal, rng};
  const int n = 64, samples = 1 << 12;
  const double pm = conditional_variance(Method::Pmcsa, ctx, Vector::Zero(1), n, samples).variance;
  const double jsa = conditional_variance(Method::Jsa, ctx, Vector::Zero(1), n, samples).variance;
  const double rb = conditional_variance(Method::MscRb, ctx, Vector::Zero(1), n, samples).variance;
  EXPECT_LT(pm, jsa);
  EXPECT_LT(pm, rb);
}

TEST(ReplicatedVariance, DuplicateSeedsGiveZero) {
  const auto target = TargetModel::gaussian(FullGaussian(Vector::Ones(2), Matrix::Identity(2, 2)));
  std::vector<VariationalParams> trace(6, VariationalParams::standard(2));
  const std::vector<long> record{1, 3, 5};
  ReplicationOptions options;
  options.num_chains = 2;
  options.duplicate_seeds = true;
  const ProposalFactory factory = [](const VariationalParams& p) { return Proposal(p); };
  for (auto m : {Method::Msc, Method::MscRb, Method::Jsa, Method::Pmcsa}) {
    const auto v = replicated_gradient_variance(m, trace, target, factory, 4, record, options, 9);
    ASSERT_EQ(v.size(), 3u);
    for (double x : v) EXPECT_EQ(x, 0.0) << method_name(m);
  }
}

TEST(ReplicatedVariance, DoublingChainsIsConsistent) {
  const auto target = TargetModel::gaussian(FullGaussian(Vector::Ones(2), Matrix::Identity(2, 2)));
  std::vector<VariationalParams> trace;
  for (int t = 0; t < 5; ++t)
    trace.emplace_back(Vector::Constant(2, 0.2 * t), Vector::Constant(2, 0.1));
  const std::vector<long> record{4};
  const ProposalFactory factory = [](const VariationalParams& p) {
    return Proposal(DefensiveMixture::matched(p));
  };
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    ReplicationOptions a, b;
    a.num_chains = 64;
    b.num_chains = 128;
    const double va =
        replicated_gradient_variance(Method::Msc, trace, target, factory, 8, record, a, trial)[0];
    const double vb = replicated_gradient_variance(Method::Msc, trace, target, factory, 8, record, b,
                                                   trial + 1000)[0];
    EXPECT_LT(va, 5.0 * vb);
    EXPECT_LT(vb, 5.0 * va);
  }
}

TEST(ReplicatedVariance, ThreadCountDoesNotChangeResult) {
  const auto target = TargetModel::gaussian(FullGaussian(Vector::Zero(3), Matrix::Identity(3, 3)));
  std::vector<VariationalParams> trace(10, VariationalParams(Vector::Constant(3, 0.5),
                                                             Vector::Zero(3)));
  const std::vector<long> record{1, 5, 10};
  const ProposalFactory factory = [](const VariationalParams& p) { return Proposal(p); };
  ReplicationOptions one, many;
  one.num_chains = many.num_chains = 50;
  many.threads = 4;
  EXPECT_EQ(replicated_gradient_variance(Method::Pmcsa, trace, target, factory, 8, record, one, 3),
            replicated_gradient_variance(Method::Pmcsa, trace, target, factory, 8, record, many, 3));
}

TEST(Bounds, Msc) {
  EXPECT_EQ(bound_msc(inputs(0.0, 1.0, 0.0, 2)), 0.0);
  EXPECT_EQ(bound_msc(inputs(2.0, 1.0, 0.0, 2)), 4.0);
  for (int n = 2; n <= 1024; ++n)
    EXPECT_EQ(bound_msc(inputs(2.0, 3.0, 1.0, n)), bound_msc(inputs(2.0, 3.0, 1.0, 2)));
}

TEST(Bounds, MscRbDecreasingInBudget) {
  for (long t : {1L, 10L, 1000000L}) {
    double prev = std::numeric_limits<double>::infinity();
    for (int n = 2; n <= 1024; ++n) {
      auto b = inputs(1.5, 3.0, 2.0, n);
      b.t = t;
      const double v = bound_mscrb(b);
      EXPECT_LT(v, prev) << "N=" << n << " t=" << t;
      prev = v;
    }
  }
  EXPECT_THROW(bound_mscrb(inputs(1.0, 1.0, 0.0, 1)), std::invalid_argument);
}

TEST(Bounds, Jsa) {
  const auto b1 = inputs(2.0, 4.0, 0.0, 1);
  EXPECT_DOUBLE_EQ(bound_jsa(b1), 2.0 * 4.0 + 0.1 + 0.3);
  EXPECT_GT(bound_jsa(inputs(2.0, 4.0, 0.0, 4)), bound_jsa(inputs(2.0, 4.0, 0.0, 64)));
  const double limit = 0.5 * 4.0 + 0.1 + 0.3;
  const double big = bound_jsa(inputs(2.0, 4.0, 0.0, 1 << 20));
  EXPECT_LT(std::abs(big - limit) / limit, 1e-5);
  EXPECT_GT(big, limit);
}

TEST(Bounds, Pmcsa) {
  auto b = inputs(3.0, 1.0, 0.0, 1);
  b.c_cov = 0.0;
  EXPECT_DOUBLE_EQ(bound_pmcsa(b), 9.0 + 0.3);
  double prev = std::numeric_limits<double>::infinity();
  for (int n = 1; n <= 1024; ++n) {
    auto bn = inputs(3.0, 5.0, 0.0, n);
    const double v = bound_pmcsa(bn);
    EXPECT_LT(v, prev);
    prev = v;
    auto b2 = bn;
    b2.N = 2 * n;
    EXPECT_NEAR(bound_pmcsa(bn) - bn.mu_norm_sq, 2.0 * (bound_pmcsa(b2) - b2.mu_norm_sq), 1e-12);
  }
  for (int n = 3; n <= 1024; ++n)
    for (double w : {2.0, 10.0, 1e6}) {
      auto bp = inputs(1.7, w, 0.0, n);
      bp.c_cov = 0.0;
      EXPECT_LT(bound_pmcsa(bp), bound_jsa(bp));
    }
  EXPECT_THROW(bound_pmcsa(inputs(1.0, 0.5, 0.0, 2)), std::invalid_argument);
}

TEST(Bounds, MscRbAboveMeasuredSecondMoment) {
  Simulation sim(2.0);
  const FullGaussian pi(Vector::Zero(1), Matrix::Identity(1, 1));
  const auto p = VariationalParams::standard(1);
  Rng rng(7);
  const KernelContext ctx{sim.target, sim.proposal, rng};
  for (int n : {4, 16, 64}) {
    const auto report = conditional_variance(Method::MscRb, ctx, Vector::Zero(1), n, 1 << 14);
    BoundInputs b;
    b.L = report.max_grad_norm;
    b.w_star = w_star_gaussian(p, sim.params);
    b.chi2 = chi2_gaussian(p, sim.params);
    b.N = n;
    b.t = 1;
    b.mu_norm_sq = expected_score(pi, sim.params).squaredNorm();
    EXPECT_GE(bound_mscrb(b), report.second_moment) << "N=" << n;
  }
}

TEST(WstarKlCheck, Cases) {
  const auto p = VariationalParams::standard(1);
  EXPECT_FALSE(wstar_kl_check(p, p));
  const VariationalParams wide(Vector::Zero(1), Vector::Constant(1, 0.5 * std::log(2.0)));
  EXPECT_TRUE(wstar_kl_check(p, wide));
  EXPECT_NEAR(std::exp(kl_gaussian(p, wide)), std::exp(0.5 * (0.5 - 1.0 + std::log(2.0))), 1e-12);
  const VariationalParams narrow(Vector::Zero(1), Vector::Constant(1, -0.5));
  EXPECT_THROW(wstar_kl_check(p, narrow), std::domain_error);
}

TEST(WstarKlCheck, RandomPairs) {
  Rng rng(8);
  int checked = 0;
  while (checked < 100) {
    const int d = 1 + checked % 4;
    Vector mp(d), lp(d), mq(d), lq(d);
    for (int k = 0; k < d; ++k) {
      mp[k] = rng.normal();
      mq[k] = rng.normal();
      lp[k] = 0.5 * rng.normal();
      lq[k] = lp[k] + std::abs(0.5 * rng.normal()) + 1e-3;
    }
    EXPECT_TRUE(wstar_kl_check(VariationalParams(mp, lp), VariationalParams(mq, lq)));
    ++checked;
  }
}
