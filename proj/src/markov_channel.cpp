#include "bpec/markov_channel.hpp"

#include "bpec/errors.hpp"
#include "bpec/hmm_filter.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <numeric>

namespace bpec {

namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kStationaryTol = 1e-10;
constexpr double kPowerTol = 1e-12;
constexpr long kPowerMaxIter = 1'000'000;

std::string fmt_row(const char* what, std::size_t row, const char* msg)
{
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s row %zu %s", what, row, msg);
  return buf;
}

// Breadth-first reachability from state 0 over the support of the
// transition matrix (or its transpose).
std::vector<int> bfs_levels(const ChannelModel& m, bool reverse)
{
  const auto n = m.num_states();
  std::vector<int> level(n, -1);
  std::deque<std::size_t> todo{0};
  level[0] = 0;
  while (!todo.empty()) {
    const auto u = todo.front();
    todo.pop_front();
    for (std::size_t v = 0; v < n; ++v) {
      const double p = reverse ? m.transition(v, u) : m.transition(u, v);
      if (p > 0 && level[v] < 0) {
        level[v] = level[u] + 1;
        todo.push_back(v);
      }
    }
  }
  return level;
}

bool is_irreducible(const ChannelModel& m)
{
  auto reached = [](const std::vector<int>& lv) {
    return std::all_of(lv.begin(), lv.end(), [](int l) { return l >= 0; });
  };
  return reached(bfs_levels(m, false)) && reached(bfs_levels(m, true));
}

// Period of the class of state 0: gcd over support edges u->v of
// level(u) + 1 - level(v).
long period_of_first_class(const ChannelModel& m)
{
  const auto level = bfs_levels(m, false);
  long g = 0;
  for (std::size_t u = 0; u < m.num_states(); ++u) {
    if (level[u] < 0)
      continue;
    for (std::size_t v = 0; v < m.num_states(); ++v) {
      if (m.transition(u, v) > 0 && level[v] >= 0)
        g = std::gcd(g, std::labs(static_cast<long>(level[u]) + 1 - level[v]));
    }
  }
  return g;
}

double stationary_residual(const ChannelModel& m, const std::vector<double>& pi)
{
  double worst = 0;
  for (std::size_t t = 0; t < m.num_states(); ++t) {
    double acc = 0;
    for (std::size_t s = 0; s < m.num_states(); ++s)
      acc += pi[s] * m.transition(s, t);
    worst = std::max(worst, std::abs(acc - pi[t]));
  }
  return worst;
}

void normalize(std::vector<double>& v)
{
  for (auto& x : v)
    x = std::max(x, 0.0);
  const double sum = std::accumulate(v.begin(), v.end(), 0.0);
  for (auto& x : v)
    x /= sum;
}

std::vector<double> power_iteration(const ChannelModel& m)
{
  const auto n = m.num_states();
  std::vector<double> pi(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n);
  // Lazy chain (P + I) / 2 has the same stationary law and is aperiodic.
  for (long it = 0; it < kPowerMaxIter; ++it) {
    for (std::size_t t = 0; t < n; ++t) {
      double acc = 0.5 * pi[t];
      for (std::size_t s = 0; s < n; ++s)
        acc += 0.5 * pi[s] * m.transition(s, t);
      next[t] = acc;
    }
    double delta = 0;
    for (std::size_t t = 0; t < n; ++t)
      delta = std::max(delta, std::abs(next[t] - pi[t]));
    pi.swap(next);
    if (delta < kPowerTol)
      break;
  }
  normalize(pi);
  return pi;
}

} // namespace

ChannelModel::ChannelModel(std::vector<std::vector<double>> transition,
                           std::vector<EmissionRow> emission,
                           std::vector<std::string> labels)
  : emission_{std::move(emission)}
  , labels_{std::move(labels)}
{
  const auto n = emission_.size();
  if (n == 0)
    throw StructuralError("channel model needs at least one state");
  if (transition.size() != n)
    throw StructuralError("transition has " + std::to_string(transition.size()) +
                          " rows, emission has " + std::to_string(n));
  transition_.reserve(n * n);
  for (std::size_t r = 0; r < n; ++r) {
    if (transition[r].size() != n)
      throw StructuralError(fmt_row("transition", r, "has wrong width"));
    transition_.insert(transition_.end(), transition[r].begin(), transition[r].end());
  }
  if (!labels_.empty() && labels_.size() != n)
    throw StructuralError("labels length does not match state count");
}

ChannelModel ChannelModel::memoryless(const EmissionRow& emission)
{
  return ChannelModel({{1.0}}, {emission});
}

ValidationReport validate_model(const ChannelModel& model)
{
  ValidationReport report;
  const auto n = model.num_states();
  bool positive = true;

  auto check_row = [&](const char* what, std::size_t r, std::span<const double> row) {
    double sum = 0;
    bool in_range = true;
    for (double v : row) {
      if (!std::isfinite(v) || v < 0 || v > 1)
        in_range = false;
      if (!(v > 0))
        positive = false;
      sum += v;
    }
    if (!in_range)
      report.violations.push_back(fmt_row(what, r, "has an entry outside [0,1]"));
    if (!(std::abs(sum - 1.0) <= kRowSumTol))
      report.violations.push_back(fmt_row(what, r, "row not stochastic"));
  };

  for (std::size_t r = 0; r < n; ++r)
    check_row("transition", r, model.transition_row(r));
  for (std::size_t r = 0; r < n; ++r)
    check_row("emission", r, model.emission_row(r));

  report.strictly_positive = positive;
  report.irreducible = is_irreducible(model);
  report.aperiodic = period_of_first_class(model) == 1 || n == 1;
  return report;
}

std::vector<double> stationary_distribution(const ChannelModel& model)
{
  const auto n = model.num_states();
  if (n == 1)
    return {1.0};
  if (!is_irreducible(model))
    throw NoUniqueStationary("transition matrix is reducible");

  // (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
  Eigen::MatrixXd a(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c)
      a(r, c) = model.transition(c, r) - (r == c ? 1.0 : 0.0);
  a.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;

  std::vector<double> pi(n);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (lu.isInvertible()) {
    Eigen::VectorXd x = lu.solve(b);
    for (std::size_t i = 0; i < n; ++i)
      pi[i] = x(i);
    normalize(pi);
  }
  if (!lu.isInvertible() || stationary_residual(model, pi) > kStationaryTol)
    pi = power_iteration(model);
  return pi;
}

std::size_t sample_index(std::span<const double> probs, double u) noexcept
{
  double acc = 0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0)
      continue;
    last_positive = i;
    acc += probs[i];
    if (u < acc)
      return i;
  }
  return last_positive;
}

ChannelSampler::ChannelSampler(const ChannelModel& model, std::uint64_t seed)
  : model_{&model}
  , rng_{seed}
{
  const auto pi = stationary_distribution(model);
  state_ = sample_index(pi, uniform01(rng_));
}

ChannelSampler::Slot ChannelSampler::next()
{
  state_ = sample_index(model_->transition_row(state_), uniform01(rng_));
  const auto code = sample_index(model_->emission_row(state_), uniform01(rng_));
  return {state_, ErasurePattern::from_code(static_cast<unsigned>(code))};
}

Trajectory sample_trajectory(const ChannelModel& model, std::size_t n, std::uint64_t seed)
{
  Trajectory out;
  out.states.reserve(n);
  out.patterns.reserve(n);
  ChannelSampler sampler(model, seed);
  for (std::size_t t = 0; t < n; ++t) {
    const auto slot = sampler.next();
    out.states.push_back(slot.state);
    out.patterns.push_back(slot.pattern);
  }
  return out;
}

std::optional<double> forgetting_rate_bound(const ChannelModel& model)
{
  const auto n = model.num_states();
  if (n == 1)
    return 1.0;
  double p_min = 1.0;
  for (std::size_t r = 0; r < n; ++r)
    for (double v : model.transition_row(r))
      p_min = std::min(p_min, v);
  double e_min = 1.0, e_max = 0.0;
  for (std::size_t r = 0; r < n; ++r)
    for (double v : model.emission_row(r)) {
      e_min = std::min(e_min, v);
      e_max = std::max(e_max, v);
    }
  if (!(p_min > 0) || !(e_min > 0))
    return std::nullopt;
  return std::min(1.0, static_cast<double>(n) * p_min * (e_min / e_max));
}

double forgetting_slack(double sigma, int window)
{
  return 2.0 * std::pow(1.0 - sigma, window);
}

namespace {

double pattern_tv(const EmissionRow& a, const EmissionRow& b)
{
  double tv = 0;
  for (std::size_t z = 0; z < kNumPatterns; ++z)
    tv += std::abs(a[z] - b[z]);
  return tv;
}

void check_horizon(int window, int horizon)
{
  if (window < 1 || horizon <= window)
    throw ContractViolation("forgetting needs 1 <= L < horizon");
}

} // namespace

double empirical_forgetting(const ChannelModel& model, int window, int horizon,
                            std::uint64_t seed, int samples)
{
  check_horizon(window, horizon);
  const auto table = window_table(model, window, kDefaultWindowCap);
  std::mt19937_64 seeder(seed);
  double worst = 0;
  for (int i = 0; i < samples; ++i) {
    const auto traj = sample_trajectory(model, static_cast<std::size_t>(horizon - 1), seeder());
    HmmFilter filter(model);
    WindowTracker tracker(window);
    for (auto z : traj.patterns) {
      filter.observe(z);
      tracker.push(z);
    }
    const auto full = filter.stats().pattern_probs();
    const auto win = table.rows[tracker.index()].stats.pattern_probs();
    worst = std::max(worst, pattern_tv(full, win));
  }
  return worst;
}

double exhaustive_forgetting(const ChannelModel& model, int window, int horizon)
{
  check_horizon(window, horizon);
  if (horizon - 1 > 12)
    throw ResourceLimit("exhaustive forgetting is capped at horizon 13");
  const auto table = window_table(model, window, kDefaultWindowCap);
  const auto n = model.num_states();
  const int depth = horizon - 1;
  const std::size_t mask = table.size();

  double worst = 0;
  // Depth-first over every history, carrying the unnormalised forward vector.
  auto rec = [&](auto&& self, const std::vector<double>& alpha, int level, std::size_t index) -> void {
    if (level == depth) {
      EmissionRow full{};
      for (std::size_t s = 0; s < n; ++s)
        for (unsigned z = 0; z < kNumPatterns; ++z)
          full[z] += alpha[s] * model.emission(s, z);
      worst = std::max(worst, pattern_tv(full, table.rows[index % mask].stats.pattern_probs()));
      return;
    }
    for (unsigned z = 0; z < kNumPatterns; ++z) {
      std::vector<double> post(n);
      double mass = 0;
      for (std::size_t s = 0; s < n; ++s) {
        post[s] = alpha[s] * model.emission(s, z);
        mass += post[s];
      }
      if (!(mass > 0))
        continue;
      std::vector<double> next(n, 0.0);
      for (std::size_t s = 0; s < n; ++s)
        for (std::size_t t = 0; t < n; ++t)
          next[t] += post[s] / mass * model.transition(s, t);
      self(self, next, level + 1, (index * 4 + z) % mask);
    }
  };
  rec(rec, stationary_distribution(model), 0, 0);
  return worst;
}

} // namespace bpec
