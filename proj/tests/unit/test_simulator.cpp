#include <gtest/gtest.h>

#include <cmath>

#include "sharecast/simulator.hpp"

using namespace sharecast;

namespace {

SimSpec spec_of(double p, std::int64_t d, std::uint64_t seed = 1) {
  SimSpec s;
  s.p_profile = constant_profile(p);
  s.degrees = ConstantDegree{d};
  s.seed = seed;
  return s;
}

}  // namespace

TEST(Simulate, DeterministicAndValid) {
  SimSpec s = spec_of(0.006, 100, 7);
  s.degrees = LogNormalDegree{4.0, 1.0};
  s.root_degree = ConstantDegree{5000};
  const Cascade a = simulate(s), b = simulate(s);
  EXPECT_EQ(a, b);
  EXPECT_TRUE(validate_cascade(a).empty());
  EXPECT_EQ(a.final_size, static_cast<std::int64_t>(a.reshare_count()));
  EXPECT_GT(a.reshare_count(), 0u);
  for (const auto& e : a.events) EXPECT_LT(e.time_s, s.horizon_s);
  s.seed = 8;
  EXPECT_NE(simulate(s), a);
}

TEST(Simulate, ZeroInfectiousnessOnlyRoot) {
  const Cascade c = simulate(spec_of(0.0, 100));
  EXPECT_EQ(c.events.size(), 1u);
  EXPECT_EQ(c.final_size, 0);
  EXPECT_EQ(c.root().degree, 100);
}

TEST(Simulate, RejectsBadSpecs) {
  SimSpec s = spec_of(1.5, 10);
  EXPECT_THROW(simulate(s), invalid_argument);
  s = spec_of(0.1, -1);
  EXPECT_THROW(simulate(s), invalid_argument);
  s = spec_of(0.1, 1);
  s.p_profile = {{10.0, 0.1}};
  EXPECT_THROW(simulate(s), invalid_argument);
  s = spec_of(0.1, 1);
  s.horizon_s = 0;
  EXPECT_THROW(simulate(s), invalid_argument);
}

TEST(Simulate, CapExceededCarriesPartial) {
  SimSpec s = spec_of(0.05, 100);
  s.max_events = 500;
  s.horizon_s = std::numeric_limits<double>::infinity();
  try {
    simulate(s);
    FAIL() << "expected cap_exceeded";
  } catch (const cap_exceeded& e) {
    EXPECT_GT(e.partial().reshare_count(), 500u);
    EXPECT_TRUE(validate_cascade(e.partial()).empty());
  }
}

TEST(Simulate, FirstGenerationDelaysFollowKernel) {
  SimSpec s = spec_of(0.02, 0);
  s.root_degree = ConstantDegree{200000};
  s.horizon_s = std::numeric_limits<double>::infinity();
  const Cascade c = simulate(s);
  const double n = static_cast<double>(c.reshare_count());
  // Binomial(200000, 0.02) has sd ~ 63.
  EXPECT_NEAR(n, 4000.0, 5 * 63.0);
  const auto k = default_kernel();
  for (double x : {60.0, 300.0, 3600.0, 86400.0}) {
    const double want = phi_mass(0, x, k);
    const double got = static_cast<double>(c.reshares_until(x)) / n;
    EXPECT_NEAR(got, want, 5 * std::sqrt(want * (1 - want) / n)) << x;
  }
}

TEST(Simulate, HorizonTruncatesAndScalesCount) {
  SimSpec s = spec_of(0.02, 0);
  s.root_degree = ConstantDegree{200000};
  s.horizon_s = 3600.0;
  const Cascade c = simulate(s);
  const double mean = 200000 * 0.02 * phi_mass(0, 3600, default_kernel());
  EXPECT_NEAR(static_cast<double>(c.reshare_count()), mean, 5 * std::sqrt(mean));
  for (const auto& e : c.events) EXPECT_LT(e.time_s, 3600.0);
}

TEST(Simulate, ProfileSwitchOffStopsReshares) {
  SimSpec s = spec_of(0.02, 50);
  s.p_profile = {{0.0, 0.02}, {1800.0, 0.0}};
  s.root_degree = ConstantDegree{20000};
  const Cascade c = simulate(s);
  EXPECT_GT(c.reshare_count(), 10u);
  for (const auto& e : c.events) EXPECT_LT(e.time_s, 1800.0);
}

TEST(Simulate, GaltonWatsonMean) {
  // Total progeny of a root with d exposures: pd / (1 - pd).
  SimSpec s = spec_of(0.05, 10, 100);
  s.horizon_s = std::numeric_limits<double>::infinity();
  const auto est = mc_final_size(s, 4000);
  EXPECT_NEAR(est.mean, 1.0, 4 * est.std_error);
  EXPECT_GT(est.std_error, 0.0);
}

TEST(Profiles, Shapes) {
  EXPECT_EQ(constant_profile(0.1).size(), 1u);
  const auto io = immediate_outbreak_profile(0.1);
  EXPECT_EQ(io.front().p, 0.1);
  EXPECT_LT(io.back().p, io.front().p);
  const auto rr = rise_and_recession_profile(0.1);
  EXPECT_LT(rr.front().p, rr[1].p);
  const auto wl = wave_like_profile(0.1);
  EXPECT_EQ(wl.size(), 15u);
  EXPECT_NEAR(mean_degree(LogNormalDegree{0.0, 1.0}), std::exp(0.5), 1e-15);
  EXPECT_EQ(mean_degree(EmpiricalDegree{{1, 2, 6}}), 3.0);
}

TEST(SimulateCorpus, DeterministicIdsAndPostTimes) {
  std::vector<MixtureComponent> mix{{1.0, spec_of(0.004, 100), 0.5, 1.5},
                                    {2.0, spec_of(0.002, 50), 1.0, 1.0}};
  mix[0].spec.root_degree = ConstantDegree{1000};
  const auto a = simulate_corpus(5, mix, 3);
  const auto b = simulate_corpus(5, mix, 3);
  ASSERT_EQ(a.size(), 5u);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a[0].article_id, "a00000");
  EXPECT_EQ(a[4].article_id, "a00004");
  EXPECT_EQ(a[3].post_time, 180);
  for (const auto& c : a) EXPECT_TRUE(validate_cascade(c).empty());
  EXPECT_NE(simulate_corpus(5, mix, 4), a);
  EXPECT_THROW(simulate_corpus(0, mix, 3), invalid_argument);
  EXPECT_THROW(simulate_corpus(2, {}, 3), invalid_argument);
}
