#pragma once

#include "bpec/capacity_region.hpp"
#include "bpec/hmm_filter.hpp"
#include "bpec/markov_channel.hpp"

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <vector>

namespace bpec {

using PacketId = std::uint64_t;

enum class Action
{
  Idle = 0,
  SendRx1 = 1,
  SendRx2 = 2,
  Coded = 3,
  Poison = 4,
  Remedy = 5,
};

const char* to_string(Action a) noexcept;

/// A pending packet: `want` is the original the receiver still needs,
/// `content` the packet whose reception completes decoding of `want`.
struct QueueEntry
{
  PacketId want = 0;
  PacketId content = 0;
};

/// Poisoned pair awaiting its remedy; both receivers' views live here so
/// that Q3^(1) and Q3^(2) always change together.
struct PendingRemedy
{
  PacketId poison1 = 0;
  PacketId poison2 = 0;
  PacketId remedy = 0;
  std::array<QueueEntry, 2> view;
  ErasurePattern at_poison;
};

struct QueueState
{
  std::array<std::deque<PacketId>, 2> q1;
  std::array<std::deque<QueueEntry>, 2> q2;
  std::deque<PendingRemedy> q3;
  std::array<std::uint64_t, 2> delivered{};
  std::uint64_t slot = 0;

  std::size_t q1_size(int j) const { return q1.at(j - 1).size(); }
  std::size_t q2_size(int j) const { return q2.at(j - 1).size(); }
  std::size_t q3_size() const noexcept { return q3.size(); }
  /// Packets for receiver j still in the system.
  std::size_t in_system(int j) const { return q1_size(j) + q2_size(j) + q3.size(); }
  std::size_t total() const { return in_system(1) + in_system(2); }
};

bool is_feasible(const QueueState& state, Action a);

enum class QueueId
{
  Q1 = 1,
  Q2 = 2,
  Q3 = 3,
  Q4 = 4,
};

struct Movement
{
  int receiver = 1;
  QueueId from = QueueId::Q1;
  QueueId to = QueueId::Q4;
  PacketId packet = 0;

  bool operator==(const Movement&) const = default;
};

struct StepRecord
{
  Action action = Action::Idle;
  /// Originals XORed into the transmitted packet; empty when idle.
  std::vector<PacketId> combo;
  std::vector<Movement> moves;
  std::array<std::vector<PacketId>, 2> delivered;
};

/// Apply one transmission. Throws ContractViolation for infeasible actions.
StepRecord step(QueueState& state, Action action, ErasurePattern z);

/// Uncoded send of the lone head of Q2^(receiver), used when action 3 is drawn
/// but the other Q2 is empty.
StepRecord step_lone_retransmission(QueueState& state, int receiver, ErasurePattern z);

std::array<double, kNumActions> maxweight_weights(const QueueState& state,
                                                  const ErasureStats& stats);

Action maxweight_action(const QueueState& state, const ErasureStats& stats);

/// A sampled action after substitution. `lone_receiver` is set when action 3
/// degrades to the uncoded retransmission from that receiver's Q2.
struct Decision
{
  Action drawn = Action::Idle;
  Action action = Action::Idle;
  int lone_receiver = 0;
};

/// What a drawn action 4 does when exactly one Q1 is nonempty.
enum class PoisonFallback
{
  Idle,
  /// Send that receiver's head uncoded (action 1 or 2 semantics).
  Uncoded,
};

Decision probabilistic_action(const ActionRow& row, const QueueState& state,
                              std::mt19937_64& rng,
                              PoisonFallback poison_fallback = PoisonFallback::Idle);

enum class SchedulerKind
{
  MaxWeight,
  Probabilistic,
};

enum class Verdict
{
  Stable,
  Unstable,
  Inconclusive,
};

const char* to_string(SchedulerKind k) noexcept;
const char* to_string(Verdict v) noexcept;

struct SimConfig
{
  SchedulerKind scheduler = SchedulerKind::MaxWeight;
  /// Required for the probabilistic scheduler.
  std::optional<ActionDistribution> dist;
  double R1 = 0;
  double R2 = 0;
  std::uint64_t slots = 0;
  std::uint64_t seed = 0;
  bool record_trace = false;
  bool record_slots = false;
  double backlog_bound = 500;
  PoisonFallback poison_fallback = PoisonFallback::Idle;
};

struct Checkpoint
{
  std::uint64_t slot = 0;
  std::size_t total = 0;
  std::array<std::uint64_t, 2> arrivals{};
  std::array<std::uint64_t, 2> delivered{};
  std::array<std::size_t, 2> in_system{};
};

struct TraceLine
{
  std::uint64_t slot = 0;
  Action action = Action::Idle;
  std::vector<PacketId> combo;
  bool received_rx1 = false;
  bool received_rx2 = false;
  std::array<std::vector<PacketId>, 2> delivered;
};

struct SlotLine
{
  std::uint64_t slot = 0;
  Action action = Action::Idle;
  ErasurePattern z;
  std::size_t total = 0;
  std::array<unsigned, 2> delivered{};
};

struct DecodeResult
{
  std::array<bool, 2> ok{true, true};
  std::array<std::optional<PacketId>, 2> counterexample;
  std::uint64_t checked = 0;

  bool passed() const noexcept { return ok[0] && ok[1]; }
};

struct SimReport
{
  SchedulerKind scheduler = SchedulerKind::MaxWeight;
  double R1 = 0;
  double R2 = 0;
  std::uint64_t slots = 0;
  std::uint64_t seed = 0;
  std::uint64_t checkpoint_every = 1;
  std::uint64_t warmup = 0;
  std::vector<Checkpoint> checkpoints;
  std::array<std::uint64_t, 2> arrivals{};
  std::array<std::uint64_t, 2> delivered{};
  std::array<std::size_t, 2> in_system{};
  /// Index 0 counts idle slots, 1..5 the executed actions.
  std::array<std::uint64_t, 6> action_histogram{};
  std::uint64_t substitutions = 0;
  std::array<double, 2> throughput{};
  std::array<double, 2> arrival_rate{};
  bool conservation_ok = true;
  double backlog_bound = 500;
  double slope = 0;
  double mean_backlog = 0;
  Verdict verdict = Verdict::Inconclusive;
  std::optional<DecodeResult> decode;
  std::vector<TraceLine> trace;
  std::vector<SlotLine> slot_lines;
};

inline constexpr std::uint64_t kMinVerdictSlots = 10'000;

SimReport simulate(const ChannelModel& model, const SimConfig& config);

struct TrendFit
{
  double slope = 0;
  double mean = 0;
};

/// Least-squares slope and mean of total backlog over the last half.
TrendFit backlog_trend(const SimReport& report);

Verdict stability_verdict(const SimReport& report);

DecodeResult decode_verify(const std::vector<TraceLine>& trace);

} // namespace bpec
