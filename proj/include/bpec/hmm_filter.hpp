#pragma once

#include "bpec/markov_channel.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace bpec {

/// Posterior P(S_t | feedback so far) over the hidden states.
using Belief = std::vector<double>;

/// Predictive erasure probabilities for one slot.
struct ErasureStats
{
  double eps12 = 0;   ///< P(1,1): erased at both receivers
  double eps_n12 = 0; ///< P(0,1): erased at Rx2 only
  double eps1_n2 = 0; ///< P(1,0): erased at Rx1 only
  double eps1 = 0;    ///< P(Z1 = 1)
  double eps2 = 0;    ///< P(Z2 = 1)

  static ErasureStats from_pattern_probs(const EmissionRow& p) noexcept;

  double eps(int receiver) const noexcept { return receiver == 1 ? eps1 : eps2; }

  /// Back to the four pattern probabilities in the fixed code order.
  EmissionRow pattern_probs() const noexcept;
};

Belief init_belief(const ChannelModel& model);

/// Bayes update with the observed pattern followed by one transition step.
/// Throws ZeroLikelihood when the observation is impossible under the belief.
Belief filter_step(const ChannelModel& model, const Belief& belief, ErasurePattern observed);

ErasureStats predict_stats(const ChannelModel& model, const Belief& belief);

/// Recursive full-history predictor used by the max-weight scheduler.
class HmmFilter
{
public:
  explicit HmmFilter(const ChannelModel& model);

  const Belief& belief() const noexcept { return belief_; }
  ErasureStats stats() const { return predict_stats(*model_, belief_); }
  void observe(ErasurePattern z) { belief_ = filter_step(*model_, belief_, z); }

private:
  const ChannelModel* model_;
  Belief belief_;
};

inline constexpr int kDefaultWindowCap = 10;

struct WindowRow
{
  double prob = 0;
  ErasureStats stats;
};

/// All 4^L feedback windows, indexed lexicographically with the oldest
/// pattern most significant.
struct WindowTable
{
  int window = 0;
  std::vector<WindowRow> rows;

  std::size_t size() const noexcept { return rows.size(); }
};

WindowTable window_table(const ChannelModel& model, int window, int cap = kDefaultWindowCap);

/// Index of a window given its patterns, oldest first.
std::size_t window_index(std::span<const ErasurePattern> patterns) noexcept;

/// "00.01.11"-style key, oldest slot first.
std::string window_key(std::size_t index, int window);

/// Inverse of window_key. Throws FormatError on malformed keys.
std::size_t parse_window_key(const std::string& key, int window);

/// Rolling window over the most recent L patterns.
class WindowTracker
{
public:
  explicit WindowTracker(int window);

  void push(ErasurePattern z) noexcept { index_ = (index_ * 4 + z.code()) % modulus_; }
  std::size_t index() const noexcept { return index_; }
  int window() const noexcept { return window_; }

private:
  int window_;
  std::size_t modulus_;
  std::size_t index_ = 0;
};

} // namespace bpec
