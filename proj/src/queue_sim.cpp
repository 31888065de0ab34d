#include "bpec/queue_sim.hpp"

#include "bpec/errors.hpp"

#include <algorithm>
#include <iterator>
#include <unordered_map>

namespace bpec {

const char* to_string(Action a) noexcept
{
  switch (a) {
    case Action::Idle: return "idle";
    case Action::SendRx1: return "1";
    case Action::SendRx2: return "2";
    case Action::Coded: return "3";
    case Action::Poison: return "4";
    case Action::Remedy: return "5";
  }
  return "?";
}

const char* to_string(SchedulerKind k) noexcept
{
  return k == SchedulerKind::MaxWeight ? "maxweight" : "probabilistic";
}

const char* to_string(Verdict v) noexcept
{
  switch (v) {
    case Verdict::Stable: return "Stable";
    case Verdict::Unstable: return "Unstable";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

bool is_feasible(const QueueState& s, Action a)
{
  switch (a) {
    case Action::Idle: return true;
    case Action::SendRx1: return !s.q1[0].empty();
    case Action::SendRx2: return !s.q1[1].empty();
    case Action::Coded: return !s.q2[0].empty() && !s.q2[1].empty();
    case Action::Poison: return !s.q1[0].empty() && !s.q1[1].empty();
    case Action::Remedy: return !s.q3.empty();
  }
  return false;
}

namespace {

bool received(ErasurePattern z, int j) noexcept
{
  return j == 1 ? z.received_rx1() : z.received_rx2();
}

std::size_t idx(int j) noexcept
{
  return static_cast<std::size_t>(j - 1);
}

void deliver(QueueState& s, StepRecord& rec, int j, QueueId from, PacketId p)
{
  ++s.delivered[idx(j)];
  rec.delivered[idx(j)].push_back(p);
  rec.moves.push_back({j, from, QueueId::Q4, p});
}

// Sorted XOR support: duplicated ids cancel.
std::vector<PacketId> xor_support(std::vector<PacketId> ids)
{
  std::sort(ids.begin(), ids.end());
  std::vector<PacketId> out;
  for (auto id : ids) {
    if (!out.empty() && out.back() == id)
      out.pop_back();
    else
      out.push_back(id);
  }
  return out;
}

void send_original(QueueState& s, StepRecord& rec, int j, ErasurePattern z)
{
  auto& q = s.q1[idx(j)];
  const PacketId p = q.front();
  rec.combo = {p};
  if (received(z, j)) {
    q.pop_front();
    deliver(s, rec, j, QueueId::Q1, p);
  } else if (received(z, 3 - j)) {
    q.pop_front();
    s.q2[idx(j)].push_back({p, p});
    rec.moves.push_back({j, QueueId::Q1, QueueId::Q2, p});
  }
}

void send_coded(QueueState& s, StepRecord& rec, ErasurePattern z)
{
  rec.combo = xor_support({s.q2[0].front().content, s.q2[1].front().content});
  for (int j = 1; j <= 2; ++j) {
    if (!received(z, j))
      continue;
    const auto e = s.q2[idx(j)].front();
    s.q2[idx(j)].pop_front();
    deliver(s, rec, j, QueueId::Q2, e.want);
  }
}

void send_poison(QueueState& s, StepRecord& rec, ErasurePattern z)
{
  const PacketId p1 = s.q1[0].front();
  const PacketId p2 = s.q1[1].front();
  rec.combo = xor_support({p1, p2});
  const bool r1 = z.received_rx1(), r2 = z.received_rx2();
  if (!r1 && !r2)
    return;
  s.q1[0].pop_front();
  s.q1[1].pop_front();

  PendingRemedy pending;
  pending.poison1 = p1;
  pending.poison2 = p2;
  pending.at_poison = z;
  // Only Rx1 holds p1 + p2: it lacks p2, Rx2 lacks everything, so p2 helps
  // both. Otherwise p1 is the remedy.
  pending.remedy = (r1 && !r2) ? p2 : p1;
  pending.view = {QueueEntry{p1, pending.remedy}, QueueEntry{p2, pending.remedy}};
  s.q3.push_back(pending);
  rec.moves.push_back({1, QueueId::Q1, QueueId::Q3, p1});
  rec.moves.push_back({2, QueueId::Q1, QueueId::Q3, p2});
}

void send_remedy(QueueState& s, StepRecord& rec, ErasurePattern z)
{
  const auto pending = s.q3.front();
  rec.combo = {pending.remedy};
  const bool r1 = z.received_rx1(), r2 = z.received_rx2();
  if (!r1 && !r2)
    return;
  s.q3.pop_front();
  for (int j = 1; j <= 2; ++j) {
    const auto& view = pending.view[idx(j)];
    if (received(z, j)) {
      deliver(s, rec, j, QueueId::Q3, view.want);
    } else {
      s.q2[idx(j)].push_back(view);
      rec.moves.push_back({j, QueueId::Q3, QueueId::Q2, view.want});
    }
  }
}

} // namespace

StepRecord step(QueueState& state, Action action, ErasurePattern z)
{
  if (!is_feasible(state, action))
    throw ContractViolation(std::string("action ") + to_string(action) +
                            " is infeasible in the current queue state");
  StepRecord rec;
  rec.action = action;
  switch (action) {
    case Action::Idle: break;
    case Action::SendRx1: send_original(state, rec, 1, z); break;
    case Action::SendRx2: send_original(state, rec, 2, z); break;
    case Action::Coded: send_coded(state, rec, z); break;
    case Action::Poison: send_poison(state, rec, z); break;
    case Action::Remedy: send_remedy(state, rec, z); break;
  }
  return rec;
}

StepRecord step_lone_retransmission(QueueState& state, int receiver, ErasurePattern z)
{
  auto& q = state.q2.at(idx(receiver));
  if (q.empty())
    throw ContractViolation("lone retransmission from an empty Q2");
  StepRecord rec;
  rec.action = Action::Coded;
  const auto e = q.front();
  rec.combo = {e.content};
  if (received(z, receiver)) {
    q.pop_front();
    deliver(state, rec, receiver, QueueId::Q2, e.want);
  }
  return rec;
}

std::array<double, kNumActions> maxweight_weights(const QueueState& s, const ErasureStats& e)
{
  const auto q11 = static_cast<double>(s.q1_size(1));
  const auto q12 = static_cast<double>(s.q1_size(2));
  const auto q21 = static_cast<double>(s.q2_size(1));
  const auto q22 = static_cast<double>(s.q2_size(2));
  const auto q3 = static_cast<double>(s.q3_size());
  return {
    (1 - e.eps1) * q11 + e.eps1_n2 * (q11 - q21),
    (1 - e.eps2) * q12 + e.eps_n12 * (q12 - q22),
    (1 - e.eps1) * q21 + (1 - e.eps2) * q22,
    (1 - e.eps12) * (q11 - q3 + q12 - q3),
    e.eps1_n2 * (q3 - q21) + (1 - e.eps1) * q3 + e.eps_n12 * (q3 - q22) + (1 - e.eps2) * q3,
  };
}

Action maxweight_action(const QueueState& state, const ErasureStats& stats)
{
  const auto w = maxweight_weights(state, stats);
  Action best = Action::Idle;
  double best_w = 0;
  for (int a = 1; a <= kNumActions; ++a) {
    const auto act = static_cast<Action>(a);
    if (!is_feasible(state, act))
      continue;
    const double v = w[static_cast<std::size_t>(a - 1)];
    if (best == Action::Idle || v > best_w) {
      best = act;
      best_w = v;
    }
  }
  return best;
}

Decision probabilistic_action(const ActionRow& row, const QueueState& state,
                              std::mt19937_64& rng, PoisonFallback poison_fallback)
{
  Decision d;
  d.drawn = static_cast<Action>(sample_index(row, uniform01(rng)) + 1);
  if (is_feasible(state, d.drawn)) {
    d.action = d.drawn;
    return d;
  }
  if (d.drawn == Action::Coded) {
    const bool has1 = !state.q2[0].empty(), has2 = !state.q2[1].empty();
    if (has1 != has2) {
      d.action = Action::Coded;
      d.lone_receiver = has1 ? 1 : 2;
      return d;
    }
  }
  if (d.drawn == Action::Poison && poison_fallback == PoisonFallback::Uncoded) {
    if (!state.q1[0].empty()) {
      d.action = Action::SendRx1;
      return d;
    }
    if (!state.q1[1].empty()) {
      d.action = Action::SendRx2;
      return d;
    }
  }
  d.action = Action::Idle;
  return d;
}

namespace {

std::mt19937_64 derive_rng(std::uint64_t seed, std::uint32_t stream)
{
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    stream};
  return std::mt19937_64(seq);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint32_t stream)
{
  return derive_rng(seed, stream)();
}

} // namespace

SimReport simulate(const ChannelModel& model, const SimConfig& cfg)
{
  if (!(cfg.R1 >= 0 && cfg.R1 <= 1 && cfg.R2 >= 0 && cfg.R2 <= 1))
    throw ContractViolation("arrival rates must lie in [0,1]");
  if (cfg.slots < 1)
    throw ContractViolation("simulation needs at least one slot");
  const bool prob = cfg.scheduler == SchedulerKind::Probabilistic;
  if (prob) {
    if (!cfg.dist)
      throw ContractViolation("probabilistic scheduler needs an action distribution");
    if (cfg.dist->window < 1 ||
        cfg.dist->table.size() != (std::size_t{1} << (2 * cfg.dist->window)))
      throw ContractViolation("action distribution has the wrong number of windows");
  }

  SimReport rep;
  rep.scheduler = cfg.scheduler;
  rep.R1 = cfg.R1;
  rep.R2 = cfg.R2;
  rep.slots = cfg.slots;
  rep.seed = cfg.seed;
  rep.backlog_bound = cfg.backlog_bound;
  rep.checkpoint_every = std::max<std::uint64_t>(1, cfg.slots / 4096);
  rep.warmup = cfg.slots / 10;

  ChannelSampler channel(model, derive_seed(cfg.seed, 1));
  auto arrival_rng = derive_rng(cfg.seed, 2);
  auto sched_rng = derive_rng(cfg.seed, 3);
  HmmFilter filter(model);
  const int window = prob ? cfg.dist->window : 1;
  WindowTracker tracker(window);
  if (prob)
    for (int i = 0; i < window; ++i)
      tracker.push(channel.next().pattern);

  QueueState state;
  PacketId next_id = 1;
  const std::array<double, 2> rates{cfg.R1, cfg.R2};
  std::array<std::uint64_t, 2> arrivals_at_warmup{}, delivered_at_warmup{};

  for (std::uint64_t t = 1; t <= cfg.slots; ++t) {
    state.slot = t;
    Decision d;
    if (prob) {
      d = probabilistic_action(cfg.dist->table[tracker.index()], state, sched_rng,
                               cfg.poison_fallback);
      if (d.action != d.drawn || d.lone_receiver != 0)
        ++rep.substitutions;
    } else {
      d.action = d.drawn = maxweight_action(state, filter.stats());
    }

    const auto z = channel.next().pattern;
    const auto rec = d.lone_receiver != 0 ? step_lone_retransmission(state, d.lone_receiver, z)
                                          : step(state, d.action, z);
    if (!prob)
      filter.observe(z);
    tracker.push(z);

    for (std::size_t j = 0; j < 2; ++j) {
      if (uniform01(arrival_rng) < rates[j]) {
        state.q1[j].push_back(next_id++);
        ++rep.arrivals[j];
      }
    }
    ++rep.action_histogram[static_cast<std::size_t>(d.action)];

    if (cfg.record_trace && d.action != Action::Idle)
      rep.trace.push_back({t, d.action, rec.combo, z.received_rx1(), z.received_rx2(),
                           rec.delivered});
    if (cfg.record_slots)
      rep.slot_lines.push_back({t, d.action, z, state.total(),
                                {static_cast<unsigned>(rec.delivered[0].size()),
                                 static_cast<unsigned>(rec.delivered[1].size())}});
    if (t == rep.warmup) {
      arrivals_at_warmup = rep.arrivals;
      delivered_at_warmup = state.delivered;
    }
    if (t % rep.checkpoint_every == 0 || t == cfg.slots) {
      Checkpoint cp;
      cp.slot = t;
      cp.total = state.total();
      cp.arrivals = rep.arrivals;
      cp.delivered = state.delivered;
      for (int j = 1; j <= 2; ++j) {
        cp.in_system[idx(j)] = state.in_system(j);
        if (cp.arrivals[idx(j)] != cp.delivered[idx(j)] + cp.in_system[idx(j)])
          rep.conservation_ok = false;
      }
      rep.checkpoints.push_back(cp);
    }
  }

  rep.delivered = state.delivered;
  rep.in_system = {state.in_system(1), state.in_system(2)};
  const auto measured = static_cast<double>(cfg.slots - rep.warmup);
  for (std::size_t j = 0; j < 2; ++j) {
    rep.throughput[j] = static_cast<double>(rep.delivered[j] - delivered_at_warmup[j]) / measured;
    rep.arrival_rate[j] = static_cast<double>(rep.arrivals[j] - arrivals_at_warmup[j]) / measured;
  }
  const auto fit = backlog_trend(rep);
  rep.slope = fit.slope;
  rep.mean_backlog = fit.mean;
  rep.verdict = stability_verdict(rep);
  if (cfg.record_trace)
    rep.decode = decode_verify(rep.trace);
  return rep;
}

TrendFit backlog_trend(const SimReport& report)
{
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (const auto& cp : report.checkpoints) {
    if (2 * cp.slot <= report.slots)
      continue;
    const auto x = static_cast<double>(cp.slot);
    const auto y = static_cast<double>(cp.total);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  TrendFit fit;
  if (n == 0)
    return fit;
  const auto nn = static_cast<double>(n);
  fit.mean = sy / nn;
  const double den = nn * sxx - sx * sx;
  if (n >= 2 && den > 0)
    fit.slope = (nn * sxy - sx * sy) / den;
  return fit;
}

Verdict stability_verdict(const SimReport& report)
{
  if (report.slots < kMinVerdictSlots)
    return Verdict::Inconclusive;
  const auto fit = backlog_trend(report);
  if (fit.slope <= 1e-4 && fit.mean <= report.backlog_bound)
    return Verdict::Stable;
  if (fit.slope >= 1e-2)
    return Verdict::Unstable;
  return Verdict::Inconclusive;
}

namespace {

// Row echelon basis over GF(2); rows are sorted id lists, pivot = first id.
class Gf2Basis
{
public:
  void reduce(std::vector<PacketId>& row) const
  {
    std::vector<PacketId> tmp;
    while (!row.empty()) {
      const auto it = pivots_.find(row.front());
      if (it == pivots_.end())
        return;
      tmp.clear();
      std::set_symmetric_difference(row.begin(), row.end(), it->second.begin(),
                                    it->second.end(), std::back_inserter(tmp));
      row.swap(tmp);
    }
  }

  void insert(std::vector<PacketId> row)
  {
    reduce(row);
    if (!row.empty()) {
      const auto lead = row.front();
      pivots_.emplace(lead, std::move(row));
    }
  }

  bool spans_unit(PacketId id) const
  {
    std::vector<PacketId> row{id};
    reduce(row);
    return row.empty();
  }

private:
  std::unordered_map<PacketId, std::vector<PacketId>> pivots_;
};

} // namespace

DecodeResult decode_verify(const std::vector<TraceLine>& trace)
{
  DecodeResult res;
  std::array<Gf2Basis, 2> basis;
  for (const auto& line : trace) {
    const auto combo = xor_support(line.combo);
    if (line.received_rx1)
      basis[0].insert(combo);
    if (line.received_rx2)
      basis[1].insert(combo);
    for (std::size_t j = 0; j < 2; ++j) {
      for (auto id : line.delivered[j]) {
        ++res.checked;
        if (res.ok[j] && !basis[j].spans_unit(id)) {
          res.ok[j] = false;
          res.counterexample[j] = id;
        }
      }
    }
  }
  return res;
}

} // namespace bpec
