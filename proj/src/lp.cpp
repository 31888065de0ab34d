#include "bpec/lp.hpp"

#include "bpec/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

namespace bpec::lp {

const char* to_string(Status s) noexcept
{
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
  }
  return "unknown";
}

namespace {

enum class RowKind
{
  LessEqual,
  GreaterEqual,
  Equal,
};

// Dense tableau in standard form. Columns: structural (shifted so every
// lower bound is 0), then one slack/surplus per inequality row, then one
// artificial per >= or = row. Row i of `a_` is B^{-1} A, `rhs_` is B^{-1} b.
class Tableau
{
public:
  explicit Tableau(const LinearProgram& lp)
    : lp_{lp}
    , n_{lp.num_vars()}
  {
    std::vector<std::vector<double>> rows;
    std::vector<double> rhs;
    std::vector<RowKind> kinds;

    for (const auto& c : lp.constraints) {
      if (c.coeffs.size() != n_)
        throw ContractViolation("constraint width differs from objective width");
      double b = c.rhs;
      for (std::size_t j = 0; j < n_; ++j)
        b -= c.coeffs[j] * lp.bound(j).lo;
      rows.push_back(c.coeffs);
      rhs.push_back(b);
      kinds.push_back(c.relation == Relation::Equal ? RowKind::Equal : RowKind::LessEqual);
    }
    for (std::size_t j = 0; j < n_; ++j) {
      const auto bd = lp.bound(j);
      if (!std::isfinite(bd.lo))
        throw ContractViolation("variable lower bounds must be finite");
      if (std::isfinite(bd.hi)) {
        std::vector<double> row(n_, 0.0);
        row[j] = 1.0;
        rows.push_back(std::move(row));
        rhs.push_back(bd.hi - bd.lo);
        kinds.push_back(RowKind::LessEqual);
      }
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rhs[i] < 0) {
        for (auto& v : rows[i])
          v = -v;
        rhs[i] = -rhs[i];
        if (kinds[i] == RowKind::LessEqual)
          kinds[i] = RowKind::GreaterEqual;
      }
    }

    m_ = rows.size();
    std::size_t slacks = 0, artificials = 0;
    for (auto k : kinds) {
      slacks += k != RowKind::Equal;
      artificials += k != RowKind::LessEqual;
    }
    first_artificial_ = n_ + slacks;
    cols_ = first_artificial_ + artificials;

    a_.assign(m_ * cols_, 0.0);
    rhs_ = rhs;
    basis_.assign(m_, 0);
    dead_.assign(m_, false);
    std::size_t slack = n_, art = first_artificial_;
    for (std::size_t i = 0; i < m_; ++i) {
      std::copy(rows[i].begin(), rows[i].end(), a_.begin() + static_cast<long>(i * cols_));
      switch (kinds[i]) {
        case RowKind::LessEqual:
          at(i, slack) = 1.0;
          basis_[i] = slack++;
          break;
        case RowKind::GreaterEqual:
          at(i, slack++) = -1.0;
          at(i, art) = 1.0;
          basis_[i] = art++;
          break;
        case RowKind::Equal:
          at(i, art) = 1.0;
          basis_[i] = art++;
          break;
      }
    }
    max_pivots_ = 50 * (m_ + cols_) + 1000;
  }

  bool has_artificials() const noexcept { return first_artificial_ < cols_; }

  // Phase one: maximise -sum(artificials). Returns the optimal value.
  double phase_one()
  {
    std::vector<double> cost(cols_, 0.0);
    for (std::size_t j = first_artificial_; j < cols_; ++j)
      cost[j] = -1.0;
    optimize(cost, cols_);
    return objective_value(cost);
  }

  // Pivot remaining zero-level artificials out of the basis; rows where that
  // is impossible are linearly dependent and get retired.
  void purge_artificials()
  {
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] < first_artificial_)
        continue;
      std::size_t col = cols_;
      for (std::size_t j = 0; j < first_artificial_; ++j)
        if (std::abs(at(i, j)) > kPivotTol) {
          col = j;
          break;
        }
      if (col == cols_)
        dead_[i] = true;
      else
        pivot(i, col);
    }
  }

  // Phase two on the original objective. Returns false when unbounded.
  bool phase_two()
  {
    std::vector<double> cost(cols_, 0.0);
    std::copy(lp_.objective.begin(), lp_.objective.end(), cost.begin());
    return optimize(cost, first_artificial_);
  }

  std::vector<double> point() const
  {
    std::vector<double> x(n_, 0.0);
    for (std::size_t i = 0; i < m_; ++i)
      if (basis_[i] < n_)
        x[basis_[i]] = rhs_[i];
    for (std::size_t j = 0; j < n_; ++j)
      x[j] = std::max(x[j], 0.0) + lp_.bound(j).lo;
    return x;
  }

  std::size_t pivots() const noexcept { return pivots_; }

private:
  double& at(std::size_t i, std::size_t j) noexcept { return a_[i * cols_ + j]; }
  double at(std::size_t i, std::size_t j) const noexcept { return a_[i * cols_ + j]; }

  double objective_value(const std::vector<double>& cost) const
  {
    double v = 0;
    for (std::size_t i = 0; i < m_; ++i)
      v += cost[basis_[i]] * rhs_[i];
    return v;
  }

  // Maximise cost over columns [0, allowed). Bland's rule: the lowest-index
  // improving column enters; ratio ties leave by lowest basic index.
  bool optimize(const std::vector<double>& cost, std::size_t allowed)
  {
    std::vector<double> reduced(cols_);
    for (std::size_t j = 0; j < cols_; ++j) {
      double d = cost[j];
      for (std::size_t i = 0; i < m_; ++i)
        d -= cost[basis_[i]] * at(i, j);
      reduced[j] = d;
    }
    for (;;) {
      std::size_t enter = cols_;
      for (std::size_t j = 0; j < allowed; ++j)
        if (reduced[j] > kPivotTol) {
          enter = j;
          break;
        }
      if (enter == cols_)
        return true;

      std::size_t leave = m_;
      double best = 0;
      for (std::size_t i = 0; i < m_; ++i) {
        if (dead_[i])
          continue;
        const double coef = at(i, enter);
        if (coef <= kPivotTol)
          continue;
        const double ratio = rhs_[i] / coef;
        if (leave == m_ || ratio < best - 1e-12 ||
            (ratio <= best + 1e-12 && basis_[i] < basis_[leave])) {
          if (leave == m_ || ratio < best - 1e-12)
            best = ratio;
          leave = i;
        }
      }
      if (leave == m_)
        return false;

      pivot(leave, enter);
      const double d = reduced[enter];
      const double* prow = &a_[leave * cols_];
      for (std::size_t j = 0; j < cols_; ++j)
        reduced[j] -= d * prow[j];
      reduced[enter] = 0;
    }
  }

  void pivot(std::size_t r, std::size_t e)
  {
    if (++pivots_ > max_pivots_) {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "simplex stalled after %zu pivots (%zu rows, %zu columns)", pivots_, m_,
                    cols_);
      throw NumericalFailure(buf);
    }
    double* prow = &a_[r * cols_];
    const double inv = 1.0 / prow[e];
    for (std::size_t j = 0; j < cols_; ++j)
      prow[j] *= inv;
    prow[e] = 1.0;
    rhs_[r] *= inv;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r)
        continue;
      double* row = &a_[i * cols_];
      const double f = row[e];
      if (f == 0)
        continue;
      for (std::size_t j = 0; j < cols_; ++j)
        row[j] -= f * prow[j];
      row[e] = 0;
      rhs_[i] -= f * rhs_[r];
      if (rhs_[i] < 0 && rhs_[i] > -1e-12)
        rhs_[i] = 0;
    }
    basis_[r] = e;
  }

  const LinearProgram& lp_;
  std::size_t n_;
  std::size_t m_ = 0;
  std::size_t cols_ = 0;
  std::size_t first_artificial_ = 0;
  std::vector<double> a_;
  std::vector<double> rhs_;
  std::vector<std::size_t> basis_;
  std::vector<bool> dead_;
  std::size_t pivots_ = 0;
  std::size_t max_pivots_ = 0;
};

Solution finish(const LinearProgram& lp, const Tableau& t, bool with_objective)
{
  Solution sol;
  sol.status = Status::Optimal;
  sol.point = t.point();
  sol.pivots = t.pivots();
  if (with_objective)
    for (std::size_t j = 0; j < lp.num_vars(); ++j)
      sol.value += lp.objective[j] * sol.point[j];

  const double viol = max_violation(lp, sol.point);
  if (viol > kAcceptTol) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "simplex vertex violates constraints by %.3g", viol);
    throw NumericalFailure(buf);
  }
  for (std::size_t i = 0; i < lp.constraints.size(); ++i) {
    const auto& c = lp.constraints[i];
    double lhs = 0;
    for (std::size_t j = 0; j < lp.num_vars(); ++j)
      lhs += c.coeffs[j] * sol.point[j];
    if (std::abs(lhs - c.rhs) <= kAcceptTol)
      sol.tight.push_back(i);
  }
  return sol;
}

Solution run(const LinearProgram& lp, bool with_objective)
{
  Tableau t(lp);
  if (t.has_artificials()) {
    if (t.phase_one() < -kPivotTol) {
      Solution sol;
      sol.status = Status::Infeasible;
      sol.pivots = t.pivots();
      return sol;
    }
    t.purge_artificials();
  }
  if (with_objective && !t.phase_two()) {
    Solution sol;
    sol.status = Status::Unbounded;
    sol.pivots = t.pivots();
    return sol;
  }
  return finish(lp, t, with_objective);
}

} // namespace

Solution solve(const LinearProgram& lp)
{
  return run(lp, true);
}

Solution feasible(const LinearProgram& lp)
{
  return run(lp, false);
}

double max_violation(const LinearProgram& lp, std::span<const double> x)
{
  double worst = 0;
  for (const auto& c : lp.constraints) {
    double lhs = 0;
    for (std::size_t j = 0; j < lp.num_vars(); ++j)
      lhs += c.coeffs[j] * x[j];
    const double d = lhs - c.rhs;
    worst = std::max(worst, c.relation == Relation::Equal ? std::abs(d) : d);
  }
  for (std::size_t j = 0; j < lp.num_vars(); ++j) {
    const auto bd = lp.bound(j);
    worst = std::max(worst, bd.lo - x[j]);
    worst = std::max(worst, x[j] - bd.hi);
  }
  return worst;
}

} // namespace bpec::lp
