#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "sharecast/evaluation.hpp"
#include "sharecast/simulator.hpp"

using namespace sharecast;

TEST(Ape, Basics) {
  EXPECT_EQ(ape(150.0, 100.0), 0.5);
  EXPECT_EQ(ape(42.0, 42.0), 0.0);
  EXPECT_EQ(ape(Forecast::supercritical(), 10.0), -1.0);
  EXPECT_EQ(ape(Forecast::insufficient(), 10.0), -1.0);
  EXPECT_THROW(ape(1.0, 0.0), invalid_argument);
  EXPECT_THROW(ape(Forecast::supercritical(), -1.0), invalid_argument);
}

TEST(Ape, ScaleInvariant) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.5, 1000.0);
  for (int i = 0; i < 1000; ++i) {
    const double p = u(rng), t = u(rng), k = u(rng);
    EXPECT_NEAR(ape(k * p, k * t), ape(p, t), 1e-12);
    EXPECT_GE(ape(p, t), 0.0);
  }
}

TEST(ApePair, Examples) {
  EXPECT_EQ(ape_pair(100.0, 100.0, 200.0), (ApePair{0.0, 0.5, -0.5}));
  EXPECT_EQ(ape_pair(120.0, 80.0, 80.0).diff, 0.0);
  EXPECT_EQ(ape_pair(Forecast::supercritical(), 10, 20), (ApePair{-1.0, -1.0, 0.0}));
  EXPECT_THROW(ape_pair(1.0, 0.0, 1.0), invalid_argument);
}

TEST(Coverage, Examples) {
  std::map<std::string, double> truth;
  std::map<std::string, std::optional<double>> same, reversed;
  for (int i = 0; i < 40; ++i) {
    const std::string id = "a" + std::to_string(100 + i);
    truth[id] = i;
    same[id] = i * 3.0;
    reversed[id] = -i;
  }
  EXPECT_EQ(breakout_coverage(same, truth, 20), 1.0);
  EXPECT_EQ(breakout_coverage(reversed, truth, 20), 0.0);
  // Ten of the true top 20 predicted high, the rest low.
  auto half = reversed;
  for (int i = 30; i < 40; ++i) half["a" + std::to_string(100 + i)] = 1000.0 + i;
  EXPECT_EQ(breakout_coverage(half, truth, 20), 0.5);
  EXPECT_THROW(breakout_coverage(same, truth, 41), invalid_argument);
  EXPECT_THROW(breakout_coverage(same, truth, 0), invalid_argument);
}

TEST(Coverage, UnpredictedRankLastAndTiesById) {
  const std::map<std::string, double> truth{{"a", 5}, {"b", 4}, {"c", 3}};
  std::map<std::string, std::optional<double>> pred{{"a", std::nullopt}, {"b", 1.0}, {"c", 1.0}};
  EXPECT_DOUBLE_EQ(breakout_coverage(pred, truth, 2), 0.5);
  // Equal predictions: "b" wins the single slot by id.
  EXPECT_EQ(breakout_coverage(pred, truth, 1), 0.0);
  pred["a"] = 0.5;
  EXPECT_EQ(breakout_coverage(pred, truth, 3), 1.0);
}

TEST(Coverage, InUnitIntervalAndTiePermutationInvariant) {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> v(0, 5);
  for (int rep = 0; rep < 200; ++rep) {
    std::map<std::string, double> truth;
    std::map<std::string, std::optional<double>> pred;
    for (int i = 0; i < 30; ++i) {
      const std::string id = "x" + std::to_string(i);
      truth[id] = v(rng);
      if (v(rng) > 0) pred[id] = v(rng);
    }
    const double c = breakout_coverage(pred, truth, 10);
    EXPECT_GE(c, 0.0);
    EXPECT_LE(c, 1.0);
  }
}

TEST(MedianAccuracy, Examples) {
  const std::vector<double> truth{1, 2, 3, 4, 5, 6};
  std::vector<std::optional<double>> pred(truth.begin(), truth.end());
  EXPECT_EQ(median_accuracy(pred, truth), 1.0);
  const std::vector<std::optional<double>> wrong{6, 5, 1, 1, 1, 1};
  EXPECT_EQ(median_accuracy(wrong, truth), 0.0);
  pred[0] = std::nullopt;
  EXPECT_DOUBLE_EQ(median_accuracy(pred, truth), 5.0 / 6.0);
  EXPECT_THROW(median_accuracy(std::vector<std::optional<double>>{1.0}, std::vector<double>{1.0}),
               invalid_argument);
  EXPECT_THROW(median_accuracy(pred, std::vector<double>{1, 2}), invalid_argument);
}

TEST(MedianAccuracy, InvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> truth;
    std::vector<std::optional<double>> pred, pred_t;
    std::vector<double> truth_t;
    for (int i = 0; i < 21 + rep % 4; ++i) {
      truth.push_back(std::floor(u(rng)));
      pred.push_back(std::floor(u(rng)));
      truth_t.push_back(std::exp(truth.back() / 10.0) + 3.0);
      pred_t.push_back(std::exp(*pred.back() / 10.0) + 3.0);
    }
    const double a = median_accuracy(pred, truth);
    EXPECT_EQ(a, median_accuracy(pred_t, truth_t));
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
  }
}

TEST(ApeBins, IndexAndLabels) {
  const ApeBins b;
  EXPECT_EQ(b.count(), 6u);
  EXPECT_EQ(b.index(-1.0), 0u);
  EXPECT_EQ(b.index(0.0), 1u);
  EXPECT_EQ(b.index(0.2499), 1u);
  EXPECT_EQ(b.index(0.25), 2u);
  EXPECT_EQ(b.index(0.99), 4u);
  EXPECT_EQ(b.index(1.0), 5u);
  EXPECT_EQ(b.index(17.0), 5u);
  EXPECT_EQ(b.labels(), (std::vector<std::string>{"-1", "[0,0.25)", "[0.25,0.5)", "[0.5,0.75)", "[0.75,1)", ">=1"}));
}

TEST(ApeHistogram, PerfectAndFailing) {
  const std::vector<double> times{60, 120};
  const auto perfect = ape_histogram({{0, 0}, {0.1, 0}, {0, 0.2}}, times);
  for (const auto& row : perfect.counts) EXPECT_EQ(row, (std::vector<std::size_t>{0, 3, 0, 0, 0, 0}));
  const auto failing = ape_histogram({{-1, -1}, {-1, -1}}, times);
  for (const auto& row : failing.counts) EXPECT_EQ(row, (std::vector<std::size_t>{2, 0, 0, 0, 0, 0}));
  EXPECT_THROW(ape_histogram({{0.0}}, times), invalid_argument);
}

TEST(EvaluateCorpus, WeseerFailsNoMoreThanSeismic) {
  SimSpec base;
  base.degrees = LogNormalDegree{3.5, 1.0};
  base.root_degree = LogNormalDegree{7.0, 1.0};
  base.horizon_s = 3 * 86400.0;
  std::vector<MixtureComponent> mix{{1.0, base, 0.5, 2.0}};
  mix[0].spec.p_profile = immediate_outbreak_profile(0.01);
  const auto corpus = simulate_corpus(40, mix, 9);
  const std::vector<double> times{600, 1800, 3600, 7200, 14400, 43200};
  const std::vector<ModelTag> models{ModelTag::seismic, ModelTag::weseer};
  const auto rep = evaluate_corpus(corpus, models, times, ModelParams{}, 140, 10);
  ASSERT_EQ(rep.models.size(), 2u);
  for (std::size_t j = 0; j < times.size(); ++j) {
    EXPECT_LE(rep.models[1].histogram.counts[j][0], rep.models[0].histogram.counts[j][0]);
    for (const auto& m : rep.models) {
      std::size_t total = 0;
      for (auto n : m.histogram.counts[j]) total += n;
      EXPECT_EQ(total, rep.articles);
      EXPECT_EQ(m.per_time[j].predicted + m.per_time[j].failed, rep.articles);
      EXPECT_EQ(m.per_time[j].failed, m.histogram.counts[j][0]);
    }
  }
  std::ostringstream os;
  write_ape_table(os, rep);
  const std::string table = os.str();
  EXPECT_EQ(table.substr(0, table.find('\n')),
            "model\ttime_min\t-1\t[0,0.25)\t[0.25,0.5)\t[0.5,0.75)\t[0.75,1)\t>=1\tmean_ape\tcoverage\tmedian_accuracy");
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 1 + 2 * 6);
  EXPECT_THROW(evaluate_corpus(corpus, models, times, ModelParams{}, 140, 41), invalid_argument);
}

TEST(ApeOverTime, MatchesSeries) {
  SimSpec s;
  s.p_profile = constant_profile(0.005);
  s.root_degree = ConstantDegree{3000};
  std::vector<Cascade> corpus{simulate(s)};
  const std::vector<double> times{3600.0};
  const auto h = ape_over_time(corpus, ModelTag::weseer, times, ModelParams{}, 140);
  const auto pt = weseer_series(corpus[0], times, ModelParams{}, 140)[0];
  const ApeBins bins;
  EXPECT_EQ(h.counts[0][bins.index(ape(pt.forecast, static_cast<double>(*corpus[0].final_size)))], 1u);
  corpus[0].final_size.reset();
  EXPECT_THROW(ape_over_time(corpus, ModelTag::weseer, times, ModelParams{}, 140), invalid_argument);
}
