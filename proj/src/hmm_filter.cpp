#include "bpec/hmm_filter.hpp"

#include "bpec/errors.hpp"

#include <numeric>

namespace bpec {

ErasureStats ErasureStats::from_pattern_probs(const EmissionRow& p) noexcept
{
  ErasureStats s;
  s.eps12 = p[3];
  s.eps_n12 = p[1];
  s.eps1_n2 = p[2];
  s.eps1 = s.eps12 + s.eps1_n2;
  s.eps2 = s.eps12 + s.eps_n12;
  return s;
}

EmissionRow ErasureStats::pattern_probs() const noexcept
{
  return {1.0 - eps12 - eps_n12 - eps1_n2, eps_n12, eps1_n2, eps12};
}

Belief init_belief(const ChannelModel& model)
{
  return stationary_distribution(model);
}

Belief filter_step(const ChannelModel& model, const Belief& belief, ErasurePattern observed)
{
  const auto n = model.num_states();
  const auto z = observed.code();
  Belief post(n);
  double mass = 0;
  for (std::size_t s = 0; s < n; ++s) {
    post[s] = belief[s] * model.emission(s, z);
    mass += post[s];
  }
  if (!(mass > 0))
    throw ZeroLikelihood("observed pattern has zero predictive probability");

  Belief next(n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    const double w = post[s] / mass;
    if (w == 0)
      continue;
    for (std::size_t t = 0; t < n; ++t)
      next[t] += w * model.transition(s, t);
  }
  const double total = std::accumulate(next.begin(), next.end(), 0.0);
  for (auto& v : next)
    v /= total;
  return next;
}

ErasureStats predict_stats(const ChannelModel& model, const Belief& belief)
{
  EmissionRow p{};
  for (std::size_t s = 0; s < model.num_states(); ++s)
    for (unsigned z = 0; z < kNumPatterns; ++z)
      p[z] += belief[s] * model.emission(s, z);
  return ErasureStats::from_pattern_probs(p);
}

HmmFilter::HmmFilter(const ChannelModel& model)
  : model_{&model}
  , belief_{init_belief(model)}
{}

WindowTable window_table(const ChannelModel& model, int window, int cap)
{
  if (window < 1)
    throw ContractViolation("window length must be at least 1");
  if (window > cap)
    throw ResourceLimit("window length " + std::to_string(window) + " exceeds cap " +
                        std::to_string(cap));

  const auto n = model.num_states();
  WindowTable table;
  table.window = window;
  table.rows.resize(std::size_t{1} << (2 * window));

  // alpha[k] is the unnormalised law of the hidden state after k window
  // symbols; its mass is the probability of the prefix.
  std::vector<std::vector<double>> alpha(static_cast<std::size_t>(window) + 1,
                                         std::vector<double>(n, 0.0));
  alpha[0] = stationary_distribution(model);

  auto rec = [&](auto&& self, int level, std::size_t index) -> void {
    const auto& cur = alpha[static_cast<std::size_t>(level)];
    if (level == window) {
      const double mass = std::accumulate(cur.begin(), cur.end(), 0.0);
      Belief post(n);
      for (std::size_t s = 0; s < n; ++s)
        post[s] = mass > 0 ? cur[s] / mass : 1.0 / static_cast<double>(n);
      table.rows[index] = {mass, predict_stats(model, post)};
      return;
    }
    auto& next = alpha[static_cast<std::size_t>(level) + 1];
    for (unsigned z = 0; z < kNumPatterns; ++z) {
      std::fill(next.begin(), next.end(), 0.0);
      for (std::size_t s = 0; s < n; ++s) {
        const double w = cur[s] * model.emission(s, z);
        if (w == 0)
          continue;
        for (std::size_t t = 0; t < n; ++t)
          next[t] += w * model.transition(s, t);
      }
      self(self, level + 1, index * 4 + z);
    }
  };
  rec(rec, 0, 0);
  return table;
}

std::size_t window_index(std::span<const ErasurePattern> patterns) noexcept
{
  std::size_t index = 0;
  for (auto z : patterns)
    index = index * 4 + z.code();
  return index;
}

std::string window_key(std::size_t index, int window)
{
  static constexpr const char* kSymbols[] = {"00", "01", "10", "11"};
  std::string key;
  for (int k = window - 1; k >= 0; --k) {
    key += kSymbols[(index >> (2 * k)) & 3u];
    if (k > 0)
      key += '.';
  }
  return key;
}

std::size_t parse_window_key(const std::string& key, int window)
{
  if (key.size() != static_cast<std::size_t>(3 * window - 1))
    throw FormatError(key, "window key must have " + std::to_string(window) + " symbols");
  std::size_t index = 0;
  for (int k = 0; k < window; ++k) {
    const char a = key[static_cast<std::size_t>(3 * k)];
    const char b = key[static_cast<std::size_t>(3 * k + 1)];
    if ((a != '0' && a != '1') || (b != '0' && b != '1') ||
        (k + 1 < window && key[static_cast<std::size_t>(3 * k + 2)] != '.'))
      throw FormatError(key, "malformed window key");
    index = index * 4 + static_cast<std::size_t>((a - '0') * 2 + (b - '0'));
  }
  return index;
}

WindowTracker::WindowTracker(int window)
  : window_{window}
  , modulus_{std::size_t{1} << (2 * window)}
{}

} // namespace bpec
