#include "bpec/capacity_region.hpp"

#include "bpec/errors.hpp"

#include <algorithm>
#include <cmath>

namespace bpec {

namespace {

constexpr double kCaseTol = 1e-10;
constexpr double kWitnessTol = 1e-9;

std::size_t x_var(std::size_t z) noexcept { return 2 + z; }
std::size_t y_var(std::size_t z, std::size_t windows) noexcept { return 2 + windows + z; }

double clamp01(double v) noexcept { return std::clamp(v, 0.0, 1.0); }

} // namespace

double Cuts::min() const noexcept
{
  return std::min({A, B, C, D});
}

lp::LinearProgram region_lp(const WindowTable& table, double w1, double w2, double slack)
{
  if (w1 < 0 || w2 < 0 || !(w1 + w2 > 0))
    throw ContractViolation("region weights must be nonnegative with a positive sum");

  const auto k = table.size();
  const auto n = 2 + 2 * k;
  lp::LinearProgram prog;
  prog.objective.assign(n, 0.0);
  prog.objective[0] = w1;
  prog.objective[1] = w2;
  prog.bounds.assign(n, {0.0, 1.0});
  prog.bounds[0].hi = lp::kInfinity;
  prog.bounds[1].hi = lp::kInfinity;

  std::vector<double> r1_direct(n, 0.0), r1_coded(n, 0.0), r2_direct(n, 0.0), r2_coded(n, 0.0);
  r1_direct[0] = r1_coded[0] = 1.0;
  r2_direct[1] = r2_coded[1] = 1.0;
  double both = 0;
  for (std::size_t z = 0; z < k; ++z) {
    const auto& row = table.rows[z];
    const double p = row.prob;
    r1_direct[x_var(z)] = -p * (1.0 - row.stats.eps1);
    r2_direct[y_var(z, k)] = -p * (1.0 - row.stats.eps2);
    r1_coded[y_var(z, k)] = p * (1.0 - row.stats.eps12);
    r2_coded[x_var(z)] = p * (1.0 - row.stats.eps12);
    both += p * (1.0 - row.stats.eps12);
  }
  prog.constraints.push_back({std::move(r1_direct), lp::Relation::LessEqual, slack});
  prog.constraints.push_back({std::move(r1_coded), lp::Relation::LessEqual, both + slack});
  prog.constraints.push_back({std::move(r2_direct), lp::Relation::LessEqual, slack});
  prog.constraints.push_back({std::move(r2_coded), lp::Relation::LessEqual, both + slack});
  return prog;
}

namespace {

RegionWitness witness_from(const WindowTable& table, const std::vector<double>& point)
{
  const auto k = table.size();
  RegionWitness w;
  w.window = table.window;
  w.R1 = std::max(point[0], 0.0);
  w.R2 = std::max(point[1], 0.0);
  w.x.resize(k);
  w.y.resize(k);
  for (std::size_t z = 0; z < k; ++z) {
    w.x[z] = clamp01(point[x_var(z)]);
    w.y[z] = clamp01(point[y_var(z, k)]);
  }
  return w;
}

// Optimal point of the weighted LP; at an endpoint weight the other rate is
// then maximized over the optimal face so the point is Pareto-efficient.
lp::Solution solve_pareto(const WindowTable& table, double w1, double w2, double slack)
{
  auto prog = region_lp(table, w1, w2, slack);
  auto sol = lp::solve(prog);
  if (sol.status != lp::Status::Optimal || (w1 > 0 && w2 > 0))
    return sol;

  std::vector<double> face(prog.num_vars(), 0.0);
  face[0] = -w1;
  face[1] = -w2;
  prog.constraints.push_back({std::move(face), lp::Relation::LessEqual, -sol.value});
  std::fill(prog.objective.begin(), prog.objective.end(), 0.0);
  prog.objective[w1 > 0 ? 1 : 0] = 1.0;
  auto refined = lp::solve(prog);
  if (refined.status != lp::Status::Optimal)
    return sol;
  refined.value = w1 * refined.point[0] + w2 * refined.point[1];
  return refined;
}

} // namespace

std::optional<RegionSolution> solve_region(const WindowTable& table, double w1, double w2,
                                           double slack)
{
  auto sol = solve_pareto(table, w1, w2, slack);
  if (sol.status == lp::Status::Infeasible)
    return std::nullopt;
  if (sol.status == lp::Status::Unbounded)
    throw NumericalFailure("region LP reported unbounded");
  return RegionSolution{sol.value, witness_from(table, sol.point)};
}

std::vector<ParetoPoint> boundary_sweep(const WindowTable& table, int k)
{
  if (k < 2)
    throw ContractViolation("boundary sweep needs at least 2 weight points");
  std::vector<ParetoPoint> points;
  points.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const double lambda = static_cast<double>(i) / static_cast<double>(k - 1);
    const auto sol = solve_pareto(table, lambda, 1.0 - lambda, 0.0);
    if (sol.status != lp::Status::Optimal)
      throw NumericalFailure("region LP at lambda " + std::to_string(lambda) + " is " +
                             lp::to_string(sol.status));
    ParetoPoint p;
    p.lambda = lambda;
    p.status = sol.status;
    p.witness = witness_from(table, sol.point);
    p.R1 = p.witness.R1;
    p.R2 = p.witness.R2;

    std::vector<double> check(2 + 2 * table.size());
    check[0] = p.R1;
    check[1] = p.R2;
    for (std::size_t z = 0; z < table.size(); ++z) {
      check[x_var(z)] = p.witness.x[z];
      check[y_var(z, table.size())] = p.witness.y[z];
    }
    const double viol = lp::max_violation(region_lp(table, 1.0, 0.0, 0.0), check);
    if (viol > lp::kAcceptTol)
      throw NumericalFailure("Pareto point at lambda " + std::to_string(lambda) +
                             " fails the feasibility re-check");
    points.push_back(std::move(p));
  }
  std::stable_sort(points.begin(), points.end(),
                   [](const ParetoPoint& a, const ParetoPoint& b) { return a.R1 < b.R1; });
  return points;
}

std::vector<ParetoPoint> boundary_sweep(const ChannelModel& model, int window, int k)
{
  return boundary_sweep(window_table(model, window), k);
}

std::vector<ParetoPoint> unique_vertices(const std::vector<ParetoPoint>& points, double tol)
{
  std::vector<ParetoPoint> out;
  for (const auto& p : points) {
    if (!out.empty() && std::abs(out.back().R1 - p.R1) <= tol &&
        std::abs(out.back().R2 - p.R2) <= tol)
      continue;
    out.push_back(p);
  }
  return out;
}

Sandwich sandwich(const ChannelModel& model, int window, double w1, double w2)
{
  const auto table = window_table(model, window);
  Sandwich out;
  const auto nominal = solve_region(table, w1, w2, 0.0);
  if (!nominal)
    throw NumericalFailure("nominal region LP is infeasible");
  out.nominal = nominal->value;

  const auto sigma = forgetting_rate_bound(model);
  if (!sigma)
    return out;
  out.sigma_available = true;
  out.slack = forgetting_slack(*sigma, window);
  if (const auto inner = solve_region(table, w1, w2, -out.slack))
    out.inner = inner->value;
  if (const auto outer = solve_region(table, w1, w2, out.slack))
    out.outer = outer->value;
  return out;
}

ActionDistribution xy_to_actions(const RegionWitness& witness, SPolicy policy)
{
  if (witness.x.size() != witness.y.size())
    throw ContractViolation("witness x and y differ in length");
  ActionDistribution dist;
  dist.window = witness.window;
  dist.table.resize(witness.x.size());
  const double f = clamp01(policy.s_fraction);
  const double r = clamp01(policy.remedy_share);
  for (std::size_t z = 0; z < witness.x.size(); ++z) {
    const double x0 = witness.x[z], y0 = witness.y[z];
    if (!(x0 >= -kWitnessTol && x0 <= 1 + kWitnessTol && y0 >= -kWitnessTol &&
          y0 <= 1 + kWitnessTol))
      throw ContractViolation("witness entry outside [0,1] at window " + std::to_string(z));
    const double x = clamp01(x0), y = clamp01(y0);
    const double lo = std::max(0.0, x + y - 1.0);
    const double hi = std::min(x, y);
    const double s = lo + f * std::max(0.0, hi - lo);

    ActionRow row{x - s, y - s, (1.0 - r) * s, 1.0 - x - y + s, r * s};
    double sum = 0;
    for (auto& v : row) {
      v = std::max(v, 0.0);
      sum += v;
    }
    for (auto& v : row)
      v /= sum;
    dist.table[z] = row;
  }
  return dist;
}

CapacitySet link_capacities(const WindowTable& table, const ActionDistribution& dist)
{
  if (dist.table.size() != table.size())
    throw ContractViolation("distribution and window table differ in window length");
  CapacitySet caps;
  for (int j = 1; j <= 2; ++j) {
    auto& c = caps[j];
    for (std::size_t z = 0; z < table.size(); ++z) {
      const auto& row = table.rows[z];
      const auto& a = dist.table[z];
      const double p = row.prob;
      const double ej = row.stats.eps(j);
      const double e12 = row.stats.eps12;
      const double pj = a[static_cast<std::size_t>(j - 1)];
      c.c12 += p * (ej - e12) * pj;
      c.c13 += p * (1.0 - e12) * a[3];
      c.c14 += p * (1.0 - ej) * pj;
      c.c24 += p * (1.0 - ej) * a[2];
      c.c32 += p * (ej - e12) * a[4];
      c.c34 += p * (1.0 - ej) * a[4];
    }
  }
  return caps;
}

Cuts cut_values(const LinkCapacities& c) noexcept
{
  return {c.c12 + c.c13 + c.c14, c.c13 + c.c14 + c.c24, c.c12 + c.c14 + c.c32 + c.c34,
          c.c14 + c.c24 + c.c34};
}

CutValues cut_values(const CapacitySet& caps) noexcept
{
  return {{cut_values(caps.rx[0]), cut_values(caps.rx[1])}};
}

double max_rate(const CapacitySet& caps, int receiver)
{
  return cut_values(caps[receiver]).min();
}

const char* to_string(CanonicalCase c) noexcept
{
  switch (c) {
    case CanonicalCase::Unchanged: return "unchanged";
    case CanonicalCase::I: return "I";
    case CanonicalCase::IIa: return "IIa";
    case CanonicalCase::IIb: return "IIb";
  }
  return "unknown";
}

Canonicalized canonicalize(const ActionDistribution& dist, const WindowTable& table)
{
  const auto caps = link_capacities(table, dist);
  const double c13 = caps[1].c13;

  // Pooled mass of actions 3 and 5, weighted per receiver and for both.
  std::array<double, 2> pooled{};
  double pooled_both = 0;
  bool any = false;
  for (std::size_t z = 0; z < table.size(); ++z) {
    const auto& row = table.rows[z];
    const double t = dist.table[z][2] + dist.table[z][4];
    any = any || t > 0;
    pooled[0] += row.prob * (1.0 - row.stats.eps1) * t;
    pooled[1] += row.prob * (1.0 - row.stats.eps2) * t;
    pooled_both += row.prob * (1.0 - row.stats.eps12) * t;
  }

  Canonicalized out;
  out.dist = dist;
  if (!any)
    return out;

  bool case_one = false;
  for (int j = 1; j <= 2; ++j)
    if (caps[j].c12 + c13 <= pooled[static_cast<std::size_t>(j - 1)] + kCaseTol)
      case_one = true;

  if (case_one) {
    out.which = CanonicalCase::I;
    out.theta = pooled_both > 0 ? std::clamp(c13 / pooled_both, 0.0, 1.0) : 0.0;
  } else {
    const double widest = std::max(pooled[0], pooled[1]);
    out.theta = widest > 0 ? std::min(1.0, c13 / widest) : 1.0;
    out.which = out.theta < 1.0 ? CanonicalCase::IIa : CanonicalCase::IIb;
  }

  for (auto& row : out.dist.table) {
    const double t = row[2] + row[4];
    row[4] = out.theta * t;
    row[2] = t - row[4];
  }
  return out;
}

bool achievable_check(const WindowTable& table, const ActionDistribution& dist, double R1,
                      double R2)
{
  if (dist.table.size() != table.size())
    throw ContractViolation("distribution and window table differ in window length");
  const std::array<double, 2> rates{R1, R2};
  for (int j = 1; j <= 2; ++j) {
    const auto jj = static_cast<std::size_t>(j - 1);
    double direct = 0, coded = 0;
    for (std::size_t z = 0; z < table.size(); ++z) {
      const auto& row = table.rows[z];
      const auto& a = dist.table[z];
      direct += row.prob * (1.0 - row.stats.eps(j)) * (a[jj] + a[2] + a[4]);
      coded += row.prob * (1.0 - row.stats.eps12) * (a[jj] + a[3]);
    }
    if (rates[jj] > direct + kAchievableTol || rates[jj] > coded + kAchievableTol)
      return false;
  }
  return true;
}

std::optional<ActionDistribution> find_achieving_distribution(const WindowTable& table,
                                                              const RegionWitness& witness,
                                                              double R1, double R2)
{
  for (int i = 0; i <= 10; ++i) {
    const auto dist = xy_to_actions(witness, {static_cast<double>(i) / 10.0, 0.0});
    auto canon = canonicalize(dist, table);
    if (achievable_check(table, canon.dist, R1, R2))
      return std::move(canon.dist);
  }
  return std::nullopt;
}

} // namespace bpec
