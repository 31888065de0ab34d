#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace bpec::lp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Pivot / reduced-cost threshold.
inline constexpr double kPivotTol = 1e-9;
/// Constraint violation accepted on an optimal point.
inline constexpr double kAcceptTol = 1e-8;

enum class Relation
{
  LessEqual,
  Equal,
};

struct Constraint
{
  std::vector<double> coeffs;
  Relation relation = Relation::LessEqual;
  double rhs = 0;
};

/// Finite lower bound, possibly infinite upper bound.
struct VariableBounds
{
  double lo = 0;
  double hi = kInfinity;
};

/// maximize objective . x subject to the constraints and variable bounds.
struct LinearProgram
{
  std::vector<double> objective;
  std::vector<Constraint> constraints;
  /// One entry per variable; empty means every variable is in [0, inf).
  std::vector<VariableBounds> bounds;

  std::size_t num_vars() const noexcept { return objective.size(); }
  VariableBounds bound(std::size_t j) const noexcept
  {
    return bounds.empty() ? VariableBounds{} : bounds[j];
  }
};

enum class Status
{
  Optimal,
  Infeasible,
  Unbounded,
};

const char* to_string(Status s) noexcept;

struct Solution
{
  Status status = Status::Infeasible;
  double value = 0;
  std::vector<double> point;
  /// Indices of constraints active at the returned point.
  std::vector<std::size_t> tight;
  std::size_t pivots = 0;
};

/// Two-phase dense primal simplex with Bland's rule. Throws
/// NumericalFailure when the pivot budget is exhausted or the returned vertex
/// violates a constraint by more than kAcceptTol.
Solution solve(const LinearProgram& lp);

/// Phase one only: a feasible witness (status Optimal, value 0) or Infeasible.
Solution feasible(const LinearProgram& lp);

/// Largest violation of any constraint or bound at x.
double max_violation(const LinearProgram& lp, std::span<const double> x);

} // namespace bpec::lp
