#pragma once

#include "bpec/hmm_filter.hpp"
#include "bpec/lp.hpp"
#include "bpec/markov_channel.hpp"

#include <array>
#include <optional>
#include <vector>

namespace bpec {

/// Solution of the window region LP: rates plus the per-window x, y.
struct RegionWitness
{
  int window = 0;
  std::vector<double> x;
  std::vector<double> y;
  double R1 = 0;
  double R2 = 0;
};

inline constexpr int kNumActions = 5;

/// P(a | z^L) for a = 1..5 stored at indices 0..4.
using ActionRow = std::array<double, kNumActions>;

struct ActionDistribution
{
  int window = 0;
  std::vector<ActionRow> table;
};

/// Link capacities of the per-receiver flow network.
struct LinkCapacities
{
  double c12 = 0;
  double c13 = 0;
  double c14 = 0;
  double c24 = 0;
  double c32 = 0;
  double c34 = 0;
};

struct CapacitySet
{
  std::array<LinkCapacities, 2> rx;

  const LinkCapacities& operator[](int receiver) const { return rx.at(receiver - 1); }
  LinkCapacities& operator[](int receiver) { return rx.at(receiver - 1); }
};

struct Cuts
{
  double A = 0;
  double B = 0;
  double C = 0;
  double D = 0;

  double min() const noexcept;
};

struct CutValues
{
  std::array<Cuts, 2> rx;

  const Cuts& operator[](int receiver) const { return rx.at(receiver - 1); }
};

/// LP over (R1, R2, x(z^L)..., y(z^L)...) maximizing w1 R1 + w2 R2, every
/// rate constraint relaxed by `slack` on its right-hand side.
lp::LinearProgram region_lp(const WindowTable& table, double w1, double w2, double slack);

struct RegionSolution
{
  double value = 0;
  RegionWitness witness;
};

/// Solve region_lp; nullopt when the LP is infeasible (negative slack).
std::optional<RegionSolution> solve_region(const WindowTable& table, double w1, double w2,
                                           double slack = 0);

struct ParetoPoint
{
  double lambda = 0;
  double R1 = 0;
  double R2 = 0;
  lp::Status status = lp::Status::Optimal;
  RegionWitness witness;
};

/// k weight points lambda = i/(k-1), weights (lambda, 1 - lambda), sorted by R1.
std::vector<ParetoPoint> boundary_sweep(const WindowTable& table, int k);
std::vector<ParetoPoint> boundary_sweep(const ChannelModel& model, int window, int k);

/// Drop consecutive duplicates (both coordinates within tol) of a sorted sweep.
std::vector<ParetoPoint> unique_vertices(const std::vector<ParetoPoint>& points,
                                         double tol = 1e-9);

struct Sandwich
{
  bool sigma_available = false;
  double slack = 0;
  std::optional<double> inner;
  double nominal = 0;
  std::optional<double> outer;
};

Sandwich sandwich(const ChannelModel& model, int window, double w1, double w2);

/// Choice of s = P3 + P5 inside [max(0, x+y-1), min(x, y)] and its split.
struct SPolicy
{
  /// 0 picks the lower end of the admissible interval, 1 the upper end.
  double s_fraction = 0;
  /// Fraction of s assigned to action 5.
  double remedy_share = 0;
};

ActionDistribution xy_to_actions(const RegionWitness& witness, SPolicy policy = {});

CapacitySet link_capacities(const WindowTable& table, const ActionDistribution& dist);

Cuts cut_values(const LinkCapacities& caps) noexcept;
CutValues cut_values(const CapacitySet& caps) noexcept;

double max_rate(const CapacitySet& caps, int receiver);

enum class CanonicalCase
{
  Unchanged,
  I,
  IIa,
  IIb,
};

const char* to_string(CanonicalCase c) noexcept;

struct Canonicalized
{
  ActionDistribution dist;
  CanonicalCase which = CanonicalCase::Unchanged;
  /// Share of P3 + P5 given to action 5 in every window.
  double theta = 0;
};

Canonicalized canonicalize(const ActionDistribution& dist, const WindowTable& table);

inline constexpr double kAchievableTol = 1e-8;

bool achievable_check(const WindowTable& table, const ActionDistribution& dist, double R1,
                      double R2);

/// Try s on the admissible-interval grid {0, 0.1, ..., 1}; returns the first
/// canonicalized distribution that achieves (R1, R2).
std::optional<ActionDistribution> find_achieving_distribution(const WindowTable& table,
                                                              const RegionWitness& witness,
                                                              double R1, double R2);

} // namespace bpec
