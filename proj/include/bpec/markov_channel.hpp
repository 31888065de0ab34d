#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace bpec {

/// Erasure indicators of one slot: z1 = 1 means the packet was erased at Rx1.
struct ErasurePattern
{
  bool z1 = false;
  bool z2 = false;

  /// Code in the fixed order (0,0)=0, (0,1)=1, (1,0)=2, (1,1)=3.
  constexpr unsigned code() const noexcept { return (z1 ? 2u : 0u) | (z2 ? 1u : 0u); }

  static constexpr ErasurePattern from_code(unsigned c) noexcept
  {
    return ErasurePattern{(c & 2u) != 0, (c & 1u) != 0};
  }

  constexpr bool received_rx1() const noexcept { return !z1; }
  constexpr bool received_rx2() const noexcept { return !z2; }

  friend constexpr bool operator==(ErasurePattern, ErasurePattern) = default;
};

inline constexpr std::size_t kNumPatterns = 4;

inline constexpr std::array<ErasurePattern, kNumPatterns> kAllPatterns{
  ErasurePattern{false, false}, ErasurePattern{false, true},
  ErasurePattern{true, false}, ErasurePattern{true, true}};

using EmissionRow = std::array<double, kNumPatterns>;

/// Hidden-Markov erasure channel: state transition matrix plus per-state joint
/// erasure law over the four patterns. Only dimensions are checked at
/// construction; stochasticity is reported by validate_model().
class ChannelModel
{
public:
  ChannelModel(std::vector<std::vector<double>> transition,
               std::vector<EmissionRow> emission,
               std::vector<std::string> labels = {});

  std::size_t num_states() const noexcept { return emission_.size(); }

  double transition(std::size_t from, std::size_t to) const noexcept
  {
    return transition_[from * num_states() + to];
  }
  std::span<const double> transition_row(std::size_t from) const noexcept
  {
    return {transition_.data() + from * num_states(), num_states()};
  }
  double emission(std::size_t state, unsigned pattern_code) const noexcept
  {
    return emission_[state][pattern_code];
  }
  const EmissionRow& emission_row(std::size_t state) const noexcept { return emission_[state]; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  /// Single hidden state with the given emission row (memoryless channel).
  static ChannelModel memoryless(const EmissionRow& emission);

private:
  std::vector<double> transition_;
  std::vector<EmissionRow> emission_;
  std::vector<std::string> labels_;
};

struct ValidationReport
{
  std::vector<std::string> violations;
  bool strictly_positive = false;
  bool irreducible = false;
  bool aperiodic = false;

  bool ok() const noexcept { return violations.empty(); }
};

ValidationReport validate_model(const ChannelModel& model);

/// Stationary law pi with pi * P = pi. Throws NoUniqueStationary for a
/// reducible chain.
std::vector<double> stationary_distribution(const ChannelModel& model);

/// Draws an index from a discrete law using a uniform variate u in [0,1).
std::size_t sample_index(std::span<const double> probs, double u) noexcept;

/// Uniform double in [0,1) from the top 53 bits of a 64-bit engine draw.
inline double uniform01(std::mt19937_64& rng) noexcept
{
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Streaming sampler for the hidden chain. S_0 ~ pi, then each call to next()
/// advances the state through the transition matrix and emits a pattern.
class ChannelSampler
{
public:
  ChannelSampler(const ChannelModel& model, std::uint64_t seed);

  struct Slot
  {
    std::size_t state;
    ErasurePattern pattern;
  };

  Slot next();

private:
  const ChannelModel* model_;
  std::mt19937_64 rng_;
  std::size_t state_;
};

struct Trajectory
{
  std::vector<std::size_t> states;
  std::vector<ErasurePattern> patterns;
};

Trajectory sample_trajectory(const ChannelModel& model, std::size_t n, std::uint64_t seed);

/// Conservative forgetting constant sigma = |S| * p_min * (e_min / e_max),
/// clamped to (0,1]. Empty when some entry is zero. A single-state model has
/// no hidden memory and always gets sigma = 1.
std::optional<double> forgetting_rate_bound(const ChannelModel& model);

/// 2 (1 - sigma)^L
double forgetting_slack(double sigma, int window);

/// Largest total variation sum_z |P(z_t | z^{t-1}) - P(z_t | last L)| over
/// `samples` histories of length horizon-1 drawn from the model.
double empirical_forgetting(const ChannelModel& model, int window, int horizon,
                            std::uint64_t seed, int samples = 256);

/// Same quantity maximised over every history in Z^{horizon-1}.
double exhaustive_forgetting(const ChannelModel& model, int window, int horizon);

} // namespace bpec
