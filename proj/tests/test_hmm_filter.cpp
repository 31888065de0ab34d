#include "bpec/errors.hpp"
#include "bpec/hmm_filter.hpp"
#include "oracles/oracles.hpp"

#include <gtest/gtest.h>

using namespace bpec;

namespace {

constexpr EmissionRow kUniform{0.25, 0.25, 0.25, 0.25};

void expect_stats_near(const ErasureStats& a, const ErasureStats& b, double tol)
{
  EXPECT_NEAR(a.eps12, b.eps12, tol);
  EXPECT_NEAR(a.eps_n12, b.eps_n12, tol);
  EXPECT_NEAR(a.eps1_n2, b.eps1_n2, tol);
  EXPECT_NEAR(a.eps1, b.eps1, tol);
  EXPECT_NEAR(a.eps2, b.eps2, tol);
}

} // namespace

TEST(ErasureStats, MarginalsAreSumsOfJointTerms)
{
  const auto s = ErasureStats::from_pattern_probs({0.4, 0.1, 0.2, 0.3});
  EXPECT_DOUBLE_EQ(s.eps12, 0.3);
  EXPECT_DOUBLE_EQ(s.eps_n12, 0.1);
  EXPECT_DOUBLE_EQ(s.eps1_n2, 0.2);
  EXPECT_EQ(s.eps1, s.eps12 + s.eps1_n2);
  EXPECT_EQ(s.eps2, s.eps12 + s.eps_n12);
  EXPECT_EQ(s.eps(1), s.eps1);
  EXPECT_EQ(s.eps(2), s.eps2);
  const auto back = s.pattern_probs();
  EXPECT_NEAR(back[0], 0.4, 1e-15);
  EXPECT_DOUBLE_EQ(back[3], 0.3);
}

TEST(InitBelief, Examples)
{
  EXPECT_DOUBLE_EQ(init_belief(ChannelModel::memoryless(kUniform))[0], 1.0);
  const ChannelModel sym({{0.5, 0.5}, {0.5, 0.5}}, {kUniform, kUniform});
  EXPECT_NEAR(init_belief(sym)[0], 0.5, 1e-12);
  const auto ge = init_belief(oracle::reference_model());
  EXPECT_NEAR(ge[0], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(ge[1], 1.0 / 3.0, 1e-12);
}

TEST(FilterStep, SingleStateStaysPut)
{
  const auto m = ChannelModel::memoryless({0.7, 0.1, 0.1, 0.1});
  for (auto z : kAllPatterns) EXPECT_DOUBLE_EQ(filter_step(m, {1.0}, z)[0], 1.0);
}

TEST(FilterStep, UninformativeObservationIsPureTimeUpdate)
{
  const ChannelModel m({{0.7, 0.3}, {0.4, 0.6}}, {kUniform, kUniform});
  const Belief b{0.2, 0.8};
  const auto out = filter_step(m, b, ErasurePattern{true, false});
  EXPECT_NEAR(out[0], 0.2 * 0.7 + 0.8 * 0.4, 1e-15);
  EXPECT_NEAR(out[1], 0.2 * 0.3 + 0.8 * 0.6, 1e-15);
}

TEST(FilterStep, MatchesJointEnumeration)
{
  const auto m = oracle::reference_model();
  for (std::size_t idx = 0; idx < 16; ++idx) {
    const auto z = oracle::decode_window(idx, 2);
    Belief b = init_belief(m);
    for (auto p : z) b = filter_step(m, b, p);
    const auto ref = oracle::path_posterior(m, z);
    EXPECT_NEAR(b[0], ref[0], 1e-12);
    EXPECT_NEAR(b[1], ref[1], 1e-12);
    EXPECT_NEAR(b[0] + b[1], 1.0, 1e-12);
  }
}

TEST(FilterStep, ZeroLikelihoodThrows)
{
  const ChannelModel m({{0.5, 0.5}, {0.5, 0.5}}, {EmissionRow{1, 0, 0, 0}, EmissionRow{1, 0, 0, 0}});
  EXPECT_THROW(filter_step(m, {0.5, 0.5}, ErasurePattern{true, true}), ZeroLikelihood);
}

TEST(PredictStats, DegenerateBeliefGivesEmissionRow)
{
  const auto m = oracle::reference_model();
  const auto s = predict_stats(m, {0.0, 1.0});
  EXPECT_DOUBLE_EQ(s.eps12, 0.64);
  EXPECT_DOUBLE_EQ(s.eps_n12, 0.16);
  EXPECT_DOUBLE_EQ(s.eps1_n2, 0.16);
  EXPECT_NEAR(s.eps1, 0.8, 1e-15);
}

TEST(PredictStats, IdenticalRowsIgnoreBelief)
{
  const EmissionRow e{0.5, 0.2, 0.2, 0.1};
  const ChannelModel m({{0.9, 0.1}, {0.2, 0.8}}, {e, e});
  expect_stats_near(predict_stats(m, {0.1, 0.9}), predict_stats(m, {0.9, 0.1}), 1e-15);
}

TEST(PredictStats, WeightedSumByHand)
{
  const auto m = oracle::reference_model();
  const auto s = predict_stats(m, {2.0 / 3.0, 1.0 / 3.0});
  EXPECT_NEAR(s.eps12, 0.01 * 2 / 3 + 0.64 / 3, 1e-15);
  EXPECT_NEAR(s.eps_n12, 0.09 * 2 / 3 + 0.16 / 3, 1e-15);
  EXPECT_NEAR(s.eps1, 0.1 * 2 / 3 + 0.8 / 3, 1e-15);
}

TEST(WindowTable, SingleStateLengthOne)
{
  const EmissionRow e{0.4, 0.3, 0.2, 0.1};
  const auto t = window_table(ChannelModel::memoryless(e), 1);
  ASSERT_EQ(t.size(), 4u);
  for (unsigned c = 0; c < 4; ++c) {
    EXPECT_NEAR(t.rows[c].prob, e[c], 1e-15);
    expect_stats_near(t.rows[c].stats, ErasureStats::from_pattern_probs(e), 1e-15);
  }
}

TEST(WindowTable, ProbabilitiesSumToOne)
{
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = oracle::random_model(rng, 1 + trial % 4);
    for (int L : {1, 2, 3, 4}) {
      double sum = 0;
      for (const auto& r : window_table(m, L).rows) sum += r.prob;
      EXPECT_NEAR(sum, 1.0, 1e-9);
    }
  }
}

TEST(WindowTable, MatchesPathEnumeration)
{
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = oracle::random_model(rng, 2 + trial % 2);
    const auto t = window_table(m, 2);
    for (std::size_t i = 0; i < t.size(); ++i) {
      const auto z = oracle::decode_window(i, 2);
      EXPECT_NEAR(t.rows[i].prob, oracle::path_probability(m, z), 1e-12);
      const auto pred = ErasureStats::from_pattern_probs(oracle::path_prediction(m, z));
      expect_stats_near(t.rows[i].stats, pred, 1e-12);
    }
  }
}

TEST(WindowTable, FullHistoryAgreesAtWindowLength)
{
  const auto m = oracle::reference_model();
  const int L = 3;
  const auto t = window_table(m, L);
  for (std::size_t i = 0; i < t.size(); ++i) {
    HmmFilter f(m);
    for (auto z : oracle::decode_window(i, L)) f.observe(z);
    expect_stats_near(f.stats(), t.rows[i].stats, 1e-12);
  }
}

TEST(WindowTable, AverageErasureIndependentOfWindow)
{
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const auto m = oracle::random_model(rng, 3);
    const auto stationary = predict_stats(m, init_belief(m));
    for (int L : {1, 2, 3}) {
      double e1 = 0, e2 = 0;
      for (const auto& r : window_table(m, L).rows) {
        e1 += r.prob * r.stats.eps1;
        e2 += r.prob * r.stats.eps2;
      }
      EXPECT_NEAR(e1, stationary.eps1, 1e-9);
      EXPECT_NEAR(e2, stationary.eps2, 1e-9);
    }
  }
}

TEST(WindowTable, MarginalizingOldestSymbolGivesShorterTable)
{
  const auto m = oracle::reference_model();
  const auto t3 = window_table(m, 3);
  const auto t2 = window_table(m, 2);
  for (std::size_t i = 0; i < t2.size(); ++i) {
    double p = 0;
    for (std::size_t old = 0; old < 4; ++old) p += t3.rows[old * 16 + i].prob;
    EXPECT_NEAR(p, t2.rows[i].prob, 1e-9);
  }
}

TEST(WindowTable, DegenerateWindowsKeepShape)
{
  const ChannelModel m({{0.5, 0.5}, {0.5, 0.5}},
                       {EmissionRow{0.5, 0.5, 0, 0}, EmissionRow{0.5, 0, 0.5, 0}});
  const auto t = window_table(m, 2);
  ASSERT_EQ(t.size(), 16u);
  EXPECT_EQ(t.rows[window_index(std::array{ErasurePattern{true, true}, ErasurePattern{}})].prob,
            0.0);
  for (const auto& r : t.rows) {
    EXPECT_GE(r.stats.eps12, 0.0);
    EXPECT_LE(r.stats.eps12 + r.stats.eps_n12 + r.stats.eps1_n2, 1.0 + 1e-12);
  }
}

TEST(WindowTable, CapAndLowerLimit)
{
  const auto m = oracle::reference_model();
  EXPECT_THROW(window_table(m, 11), ResourceLimit);
  EXPECT_THROW(window_table(m, 3, 2), ResourceLimit);
  EXPECT_THROW(window_table(m, 0), ContractViolation);
}

TEST(WindowKey, RoundTrip)
{
  EXPECT_EQ(window_key(0, 3), "00.00.00");
  EXPECT_EQ(window_key(1 * 16 + 0 * 4 + 3, 3), "01.00.11");
  const std::array z{ErasurePattern{false, true}, ErasurePattern{}, ErasurePattern{true, true}};
  EXPECT_EQ(window_index(z), 19u);
  for (std::size_t i = 0; i < 64; ++i) EXPECT_EQ(parse_window_key(window_key(i, 3), 3), i);
  EXPECT_THROW(parse_window_key("00.02", 2), FormatError);
  EXPECT_THROW(parse_window_key("00", 2), FormatError);
}

TEST(WindowTracker, KeepsMostRecentPatterns)
{
  WindowTracker w(2);
  w.push(ErasurePattern{true, true});
  w.push(ErasurePattern{false, true});
  EXPECT_EQ(w.index(), 3u * 4 + 1);
  w.push(ErasurePattern{true, false});
  EXPECT_EQ(w.index(), 1u * 4 + 2);
}

TEST(HmmFilter, NoZeroLikelihoodOnSampledTraces)
{
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 5; ++trial) {
    const auto m = oracle::random_model(rng, 3, 0.3);
    const auto tr = sample_trajectory(m, 20000, static_cast<std::uint64_t>(trial));
    HmmFilter f(m);
    EXPECT_NO_THROW(for (auto z : tr.patterns) f.observe(z));
  }
}
