#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>

namespace oracle {

std::vector<double> dirichlet(std::mt19937_64& rng, std::size_t k, double alpha)
{
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> out(k);
  double sum = 0;
  for (auto& v : out) {
    v = gamma(rng);
    sum += v;
  }
  for (auto& v : out) v /= sum;
  return out;
}

bpec::EmissionRow random_emission(std::mt19937_64& rng, double alpha)
{
  auto d = dirichlet(rng, bpec::kNumPatterns, alpha);
  return {d[0], d[1], d[2], d[3]};
}

bpec::ChannelModel random_model(std::mt19937_64& rng, std::size_t states, double alpha)
{
  std::vector<std::vector<double>> transition;
  std::vector<bpec::EmissionRow> emission;
  for (std::size_t s = 0; s < states; ++s) transition.push_back(dirichlet(rng, states, alpha));
  for (std::size_t s = 0; s < states; ++s) emission.push_back(random_emission(rng, alpha));
  return bpec::ChannelModel(std::move(transition), std::move(emission));
}

bpec::ChannelModel reference_model()
{
  return bpec::ChannelModel({{0.9, 0.1}, {0.2, 0.8}},
                            {bpec::EmissionRow{0.81, 0.09, 0.09, 0.01},
                             bpec::EmissionRow{0.04, 0.16, 0.16, 0.64}},
                            {"good", "bad"});
}

namespace {

bool solve_square(std::vector<std::vector<double>> a, std::vector<double> b,
                  std::vector<double>& x)
{
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    if (std::abs(a[piv][c]) < 1e-10) return false;
    std::swap(a[piv], a[c]);
    std::swap(b[piv], b[c]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      if (f == 0) continue;
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  x.resize(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
  return true;
}

} // namespace

std::optional<double> vertex_enumeration(const bpec::lp::LinearProgram& lp)
{
  using bpec::lp::Relation;
  const std::size_t n = lp.num_vars();

  struct Row
  {
    std::vector<double> g;
    double h;
    bool equality;
  };
  std::vector<Row> rows;
  for (const auto& c : lp.constraints)
    rows.push_back({c.coeffs, c.rhs, c.relation == Relation::Equal});
  for (std::size_t j = 0; j < n; ++j) {
    const auto b = lp.bound(j);
    std::vector<double> e(n, 0.0);
    e[j] = -1;
    rows.push_back({e, -b.lo, false});
    e[j] = 1;
    rows.push_back({e, b.hi, false});
  }

  std::vector<std::size_t> forced, optional;
  for (std::size_t i = 0; i < rows.size(); ++i) (rows[i].equality ? forced : optional).push_back(i);
  if (forced.size() > n) {
    // Over-determined equalities: pick n of them via the same enumeration.
    optional.insert(optional.begin(), forced.begin(), forced.end());
    forced.clear();
  }

  auto feasible = [&](const std::vector<double>& x) {
    for (const auto& r : rows) {
      double lhs = 0;
      for (std::size_t j = 0; j < n; ++j) lhs += r.g[j] * x[j];
      if (lhs > r.h + 1e-9) return false;
      if (r.equality && lhs < r.h - 1e-9) return false;
    }
    return true;
  };

  std::optional<double> best;
  const std::size_t need = n - forced.size();
  std::vector<std::size_t> pick;
  std::function<void(std::size_t)> recurse = [&](std::size_t start) {
    if (pick.size() == need) {
      std::vector<std::vector<double>> a;
      std::vector<double> b;
      for (auto i : forced) {
        a.push_back(rows[i].g);
        b.push_back(rows[i].h);
      }
      for (auto i : pick) {
        a.push_back(rows[i].g);
        b.push_back(rows[i].h);
      }
      std::vector<double> x;
      if (!solve_square(a, b, x) || !feasible(x)) return;
      double v = 0;
      for (std::size_t j = 0; j < n; ++j) v += lp.objective[j] * x[j];
      if (!best || v > *best) best = v;
      return;
    }
    for (std::size_t k = start; k < optional.size(); ++k) {
      pick.push_back(optional[k]);
      recurse(k + 1);
      pick.pop_back();
    }
  };
  recurse(0);
  return best;
}

double max_flow(std::vector<std::vector<double>> cap, std::size_t source, std::size_t sink)
{
  const std::size_t n = cap.size();
  double flow = 0;
  for (;;) {
    std::vector<std::ptrdiff_t> parent(n, -1);
    parent[source] = static_cast<std::ptrdiff_t>(source);
    std::deque<std::size_t> frontier{source};
    while (!frontier.empty() && parent[sink] < 0) {
      const auto u = frontier.front();
      frontier.pop_front();
      for (std::size_t v = 0; v < n; ++v) {
        if (parent[v] < 0 && cap[u][v] > 1e-15) {
          parent[v] = static_cast<std::ptrdiff_t>(u);
          frontier.push_back(v);
        }
      }
    }
    if (parent[sink] < 0) return flow;
    double push = std::numeric_limits<double>::infinity();
    for (auto v = sink; v != source; v = static_cast<std::size_t>(parent[v]))
      push = std::min(push, cap[static_cast<std::size_t>(parent[v])][v]);
    for (auto v = sink; v != source; v = static_cast<std::size_t>(parent[v])) {
      const auto u = static_cast<std::size_t>(parent[v]);
      cap[u][v] -= push;
      cap[v][u] += push;
    }
    flow += push;
  }
}

double link_network_flow(const bpec::LinkCapacities& c)
{
  // nodes 0..3 = Q1..Q4
  std::vector<std::vector<double>> cap(4, std::vector<double>(4, 0.0));
  cap[0][1] = c.c12;
  cap[0][2] = c.c13;
  cap[0][3] = c.c14;
  cap[1][3] = c.c24;
  cap[2][1] = c.c32;
  cap[2][3] = c.c34;
  return max_flow(cap, 0, 3);
}

namespace {

// Joint P(z_1..z_t, S_t = s) with S_0 ~ pi and z_k emitted from S_k.
std::vector<double> path_joint(const bpec::ChannelModel& model,
                               const std::vector<bpec::ErasurePattern>& z)
{
  const std::size_t n = model.num_states();
  const auto pi = bpec::stationary_distribution(model);
  std::vector<double> out(n, 0.0);
  std::vector<std::size_t> path(z.size() + 1, 0);
  std::function<void(std::size_t, double)> walk = [&](std::size_t k, double p) {
    if (k == z.size()) {
      out[path[k]] += p;
      return;
    }
    for (std::size_t s = 0; s < n; ++s) {
      path[k + 1] = s;
      walk(k + 1, p * model.transition(path[k], s) * model.emission(s, z[k].code()));
    }
  };
  for (std::size_t s0 = 0; s0 < n; ++s0) {
    path[0] = s0;
    walk(0, pi[s0]);
  }
  return out;
}

} // namespace

double path_probability(const bpec::ChannelModel& model,
                        const std::vector<bpec::ErasurePattern>& z)
{
  double p = 0;
  for (double v : path_joint(model, z)) p += v;
  return p;
}

std::vector<double> path_posterior(const bpec::ChannelModel& model,
                                   const std::vector<bpec::ErasurePattern>& z)
{
  const std::size_t n = model.num_states();
  const auto joint = path_joint(model, z);
  double total = 0;
  for (double v : joint) total += v;
  std::vector<double> next(n, 0.0);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = 0; t < n; ++t) next[t] += joint[s] / total * model.transition(s, t);
  return next;
}

bpec::EmissionRow path_prediction(const bpec::ChannelModel& model,
                                  const std::vector<bpec::ErasurePattern>& z)
{
  const double base = path_probability(model, z);
  bpec::EmissionRow out{};
  for (unsigned c = 0; c < bpec::kNumPatterns; ++c) {
    auto ext = z;
    ext.push_back(bpec::ErasurePattern::from_code(c));
    out[c] = path_probability(model, ext) / base;
  }
  return out;
}

std::vector<bpec::ErasurePattern> decode_window(std::size_t index, int L)
{
  std::vector<bpec::ErasurePattern> z(static_cast<std::size_t>(L));
  for (int k = L - 1; k >= 0; --k) {
    z[static_cast<std::size_t>(k)] = bpec::ErasurePattern::from_code(index % 4);
    index /= 4;
  }
  return z;
}

std::array<double, 2> memoryless_gauges(const bpec::ErasureStats& e, double R1, double R2)
{
  return {R1 / (1 - e.eps1) + R2 / (1 - e.eps12), R1 / (1 - e.eps12) + R2 / (1 - e.eps2)};
}

bpec::RegionWitness random_witness(std::mt19937_64& rng, int L)
{
  std::uniform_real_distribution<double> u(0.0, 1.0);
  bpec::RegionWitness w;
  w.window = L;
  const std::size_t n = std::size_t{1} << (2 * L);
  for (std::size_t i = 0; i < n; ++i) {
    w.x.push_back(u(rng));
    w.y.push_back(u(rng));
  }
  return w;
}

} // namespace oracle
