#include "bpec/cli.hpp"

#include "bpec/capacity_region.hpp"
#include "bpec/errors.hpp"
#include "bpec/io.hpp"
#include "bpec/queue_sim.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <functional>
#include <iostream>

namespace bpec::cli {

namespace {

using io::Json;

template <class T>
void take(const Json& doc, const char* key, T& dst)
{
  const auto it = doc.find(key);
  if (it == doc.end())
    return;
  try {
    dst = it->get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(std::string("config field '") + key + "' has the wrong type");
  }
}

template <class T>
void take(const Json& doc, const char* key, std::optional<T>& dst)
{
  T v{};
  if (doc.contains(key)) {
    take(doc, key, v);
    dst = v;
  }
}

void with_output(const std::string& path, std::ostream& fallback,
                 const std::function<void(std::ostream&)>& fn)
{
  if (path.empty() || path == "-") {
    fn(fallback);
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f)
    throw ConfigError("cannot open output file: " + path);
  fn(f);
}

double clip01(double v)
{
  return std::clamp(v, 0.0, 1.0);
}

double lambda_or_default(const RunConfig& cfg)
{
  const double lambda = cfg.lambda.value_or(0.5);
  if (!(lambda >= 0 && lambda <= 1))
    throw ConfigError("lambda must lie in [0,1]");
  return lambda;
}

WindowTable table_for(const ChannelModel& model, int L)
{
  if (L < 1 || L > kDefaultWindowCap)
    throw ConfigError("L must lie in [1, " + std::to_string(kDefaultWindowCap) + "]");
  return window_table(model, L);
}

ChannelModel model_for(const RunConfig& cfg)
{
  if (cfg.model.empty())
    throw ConfigError("no model file given (--model)");
  return io::load_model(cfg.model);
}

int cmd_region(const RunConfig& cfg, std::ostream& out)
{
  const auto model = model_for(cfg);
  const auto table = table_for(model, cfg.L);

  std::vector<ParetoPoint> points;
  if (cfg.lambda) {
    const double lambda = lambda_or_default(cfg);
    const auto sol = solve_region(table, lambda, 1.0 - lambda);
    if (!sol)
      throw NumericalFailure("region LP infeasible");
    points.push_back({lambda, sol->witness.R1, sol->witness.R2, lp::Status::Optimal, sol->witness});
  } else {
    if (cfg.sweep < 2)
      throw ConfigError("--sweep needs at least 2 points");
    points = boundary_sweep(table, cfg.sweep);
  }

  with_output(cfg.out, out, [&](std::ostream& o) { io::write_pareto_csv(o, points); });

  if (!cfg.witness.empty()) {
    Json arr = Json::array();
    for (const auto& p : points)
      arr.push_back({{"lambda", io::round12(p.lambda)}, {"witness", io::to_json(p.witness)}});
    with_output(cfg.witness, out, [&](std::ostream& o) { o << arr.dump(2) << '\n'; });
  }
  if (!cfg.sandwich_out.empty()) {
    Json arr = Json::array();
    for (const auto& p : points) {
      auto j = io::to_json(sandwich(model, cfg.L, p.lambda, 1.0 - p.lambda));
      j["lambda"] = io::round12(p.lambda);
      arr.push_back(j);
    }
    with_output(cfg.sandwich_out, out, [&](std::ostream& o) { o << arr.dump(2) << '\n'; });
  }
  return kOk;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out)
{
  const auto model = model_for(cfg);
  const bool prob = cfg.scheduler == "probabilistic";
  if (!prob && cfg.scheduler != "maxweight")
    throw ConfigError("--scheduler must be maxweight or probabilistic");
  if (cfg.slots < 1)
    throw ConfigError("--slots must be positive");
  if (!cfg.rates.empty() && cfg.rates.size() != 2)
    throw ConfigError("--rates expects R1,R2");

  SimConfig sim;
  sim.scheduler = prob ? SchedulerKind::Probabilistic : SchedulerKind::MaxWeight;
  sim.slots = cfg.slots;
  sim.seed = cfg.seed;
  sim.backlog_bound = cfg.backlog_bound;
  sim.record_trace = true;
  sim.record_slots = !cfg.slot_csv.empty();
  if (cfg.poison_fallback == "uncoded")
    sim.poison_fallback = PoisonFallback::Uncoded;
  else if (cfg.poison_fallback != "idle")
    throw ConfigError("--poison-fallback must be idle or uncoded");

  Json derived;
  std::optional<RegionSolution> region;
  const bool need_region = cfg.rates.empty() || (prob && cfg.dist.empty());
  std::optional<WindowTable> table;
  if (need_region) {
    table = table_for(model, cfg.L);
    const double lambda = lambda_or_default(cfg);
    region = solve_region(*table, lambda, 1.0 - lambda);
    if (!region)
      throw NumericalFailure("region LP infeasible");
    derived["lambda"] = io::round12(lambda);
    derived["L"] = cfg.L;
    derived["pareto_point"] = {io::round12(region->witness.R1), io::round12(region->witness.R2)};
  }
  if (cfg.rates.empty()) {
    sim.R1 = clip01(cfg.rate_scale * region->witness.R1);
    sim.R2 = clip01(cfg.rate_scale * region->witness.R2);
  } else {
    sim.R1 = clip01(cfg.rate_scale * cfg.rates[0]);
    sim.R2 = clip01(cfg.rate_scale * cfg.rates[1]);
  }

  if (prob) {
    if (!cfg.dist.empty()) {
      sim.dist = io::parse_distribution(io::read_file(cfg.dist, "distribution"));
    } else {
      const auto& w = region->witness;
      auto dist = find_achieving_distribution(*table, w, w.R1 - 1e-6, w.R2 - 1e-6);
      sim.dist = dist ? *dist : canonicalize(xy_to_actions(w), *table).dist;
    }
  }

  const auto report = simulate(model, sim);
  auto j = io::to_json(report);
  if (!derived.empty())
    j["derived"] = derived;
  with_output(cfg.out, out, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
  if (!cfg.trace.empty())
    with_output(cfg.trace, out, [&](std::ostream& o) { io::write_trace(o, report.trace); });
  if (!cfg.slot_csv.empty())
    with_output(cfg.slot_csv, out, [&](std::ostream& o) { io::write_slot_csv(o, report.slot_lines); });
  return report.decode && !report.decode->passed() ? kVerifyFailed : kOk;
}

int cmd_forgetting(const RunConfig& cfg, std::ostream& out)
{
  const auto model = model_for(cfg);
  if (cfg.Lmax < 1 || cfg.Lmax > kDefaultWindowCap)
    throw ConfigError("--Lmax must lie in [1, " + std::to_string(kDefaultWindowCap) + "]");
  const int horizon = cfg.horizon.value_or(cfg.Lmax + 8);
  if (horizon <= cfg.Lmax)
    throw ConfigError("--horizon must exceed --Lmax");
  const auto sigma = forgetting_rate_bound(model);

  with_output(cfg.out, out, [&](std::ostream& o) {
    o << "L,empirical_tv,bound" << (cfg.exhaustive ? ",exhaustive_tv" : "") << '\n';
    for (int L = 1; L <= cfg.Lmax; ++L) {
      o << L << ',' << io::fmt12(empirical_forgetting(model, L, horizon, cfg.seed, cfg.samples))
        << ',' << (sigma ? io::fmt12(forgetting_slack(*sigma, L)) : std::string{});
      if (cfg.exhaustive)
        o << ',' << io::fmt12(exhaustive_forgetting(model, L, horizon));
      o << '\n';
    }
  });
  return kOk;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out)
{
  if (cfg.trace.empty())
    throw ConfigError("no trace file given (--trace)");
  std::ifstream in(cfg.trace, std::ios::binary);
  if (!in)
    throw ConfigError("trace file not found: " + cfg.trace);
  const auto trace = io::read_trace(in);
  const auto res = decode_verify(trace);
  auto j = io::to_json(res);
  j["transmissions"] = trace.size();
  with_output(cfg.out, out, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
  return res.passed() ? kOk : kVerifyFailed;
}

Json cuts_json(const CutValues& cuts)
{
  Json arr = Json::array();
  for (int r = 1; r <= 2; ++r) {
    const auto& c = cuts[r];
    arr.push_back({{"A", io::round12(c.A)},
                   {"B", io::round12(c.B)},
                   {"C", io::round12(c.C)},
                   {"D", io::round12(c.D)}});
  }
  return arr;
}

int cmd_canonicalize(const RunConfig& cfg, std::ostream& out)
{
  const auto model = model_for(cfg);
  if (cfg.dist.empty())
    throw ConfigError("no distribution file given (--dist)");
  const auto dist = io::parse_distribution(io::read_file(cfg.dist, "distribution"));
  const auto table = table_for(model, dist.window);
  const auto canon = canonicalize(dist, table);

  Json j = io::to_json(canon.dist);
  j["case"] = to_string(canon.which);
  j["theta"] = io::round12(canon.theta);
  j["cuts_before"] = cuts_json(cut_values(link_capacities(table, dist)));
  j["cuts_after"] = cuts_json(cut_values(link_capacities(table, canon.dist)));
  with_output(cfg.out, out, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
  return kOk;
}

int cmd_dump_window_table(const RunConfig& cfg, std::ostream& out)
{
  const auto model = model_for(cfg);
  const auto table = table_for(model, cfg.L);
  with_output(cfg.out, out, [&](std::ostream& o) { io::write_window_table_csv(o, table); });
  return kOk;
}

// Value of --config / --config=path, located before CLI11 sees the flags so
// that flag values are parsed on top of the loaded file.
std::optional<std::string> find_config(const std::vector<std::string>& args)
{
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size())
      return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0)
      return args[i].substr(9);
  }
  return std::nullopt;
}

} // namespace

void apply_config_json(const std::string& text, RunConfig& cfg)
{
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error&) {
    throw ConfigError("config file is not valid JSON");
  }
  if (!doc.is_object())
    throw ConfigError("config file must hold a JSON object");
  take(doc, "model", cfg.model);
  take(doc, "L", cfg.L);
  take(doc, "sweep", cfg.sweep);
  take(doc, "lambda", cfg.lambda);
  take(doc, "rates", cfg.rates);
  take(doc, "rate_scale", cfg.rate_scale);
  take(doc, "slots", cfg.slots);
  take(doc, "seed", cfg.seed);
  take(doc, "out", cfg.out);
  take(doc, "scheduler", cfg.scheduler);
  take(doc, "dist", cfg.dist);
  take(doc, "witness", cfg.witness);
  take(doc, "sandwich_out", cfg.sandwich_out);
  take(doc, "trace", cfg.trace);
  take(doc, "slot_csv", cfg.slot_csv);
  take(doc, "Lmax", cfg.Lmax);
  take(doc, "horizon", cfg.horizon);
  take(doc, "samples", cfg.samples);
  take(doc, "exhaustive", cfg.exhaustive);
  take(doc, "backlog_bound", cfg.backlog_bound);
  take(doc, "poison_fallback", cfg.poison_fallback);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
  RunConfig cfg;
  try {
    if (const auto path = find_config(args))
      apply_config_json(io::read_file(*path, "config"), cfg);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kConfig;
  }

  CLI::App app{"Broadcast erasure channel with feedback and hidden memory", "bpec"};
  app.require_subcommand(1);
  std::string config_path;

  auto add_model = [&](CLI::App* sc) {
    sc->add_option("--model", cfg.model, "channel model JSON");
    sc->add_option("--config", config_path, "run configuration JSON (flags override it)");
  };
  auto add_out = [&](CLI::App* sc) { sc->add_option("--out", cfg.out, "output path (default stdout)"); };

  auto* region = app.add_subcommand("region", "Pareto boundary of the window region");
  add_model(region);
  add_out(region);
  region->add_option("--L", cfg.L, "feedback window length");
  region->add_option("--sweep", cfg.sweep, "number of weight points");
  region->add_option("--lambda", cfg.lambda, "single weight lambda instead of a sweep");
  region->add_option("--witness", cfg.witness, "witness JSON output");
  region->add_option("--sandwich-out", cfg.sandwich_out, "inner/nominal/outer JSON output");

  auto* simulate_cmd = app.add_subcommand("simulate", "queue network simulation");
  add_model(simulate_cmd);
  add_out(simulate_cmd);
  simulate_cmd->add_option("--rates", cfg.rates, "arrival rates R1,R2")->delimiter(',')->expected(2);
  simulate_cmd->add_option("--rate-scale", cfg.rate_scale, "multiplier applied to the rates");
  simulate_cmd->add_option("--L", cfg.L, "window length for derived rates/distribution");
  simulate_cmd->add_option("--lambda", cfg.lambda, "boundary weight for derived rates");
  simulate_cmd->add_option("--slots", cfg.slots, "number of slots");
  simulate_cmd->add_option("--seed", cfg.seed, "random seed");
  simulate_cmd->add_option("--scheduler", cfg.scheduler, "maxweight | probabilistic");
  simulate_cmd->add_option("--dist", cfg.dist, "action distribution JSON (probabilistic)");
  simulate_cmd->add_option("--trace", cfg.trace, "transmission trace output (JSON lines)");
  simulate_cmd->add_option("--slot-csv", cfg.slot_csv, "per-slot CSV output");
  simulate_cmd->add_option("--backlog-bound", cfg.backlog_bound, "mean backlog bound for Stable");
  simulate_cmd->add_option("--poison-fallback", cfg.poison_fallback,
                           "action 4 with one empty Q1: idle (default) | uncoded");

  auto* forgetting = app.add_subcommand("forgetting", "memory forgetting table");
  add_model(forgetting);
  add_out(forgetting);
  forgetting->add_option("--Lmax", cfg.Lmax, "largest window length");
  forgetting->add_option("--horizon", cfg.horizon, "history length + 1");
  forgetting->add_option("--seed", cfg.seed, "random seed");
  forgetting->add_option("--samples", cfg.samples, "sampled histories per L");
  forgetting->add_flag("--exhaustive", cfg.exhaustive, "also enumerate every history");

  auto* verify = app.add_subcommand("verify", "GF(2) decodability check of a trace");
  verify->add_option("--trace", cfg.trace, "trace file (JSON lines)");
  verify->add_option("--config", config_path, "run configuration JSON");
  add_out(verify);

  auto* canon = app.add_subcommand("canonicalize", "re-split actions 3 and 5 of a distribution");
  add_model(canon);
  add_out(canon);
  canon->add_option("--dist", cfg.dist, "action distribution JSON");

  auto* dump = app.add_subcommand("dump-window-table", "window probabilities and erasure stats");
  add_model(dump);
  add_out(dump);
  dump->add_option("--L", cfg.L, "feedback window length");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (region->parsed())
      return cmd_region(cfg, out);
    if (simulate_cmd->parsed())
      return cmd_simulate(cfg, out);
    if (forgetting->parsed())
      return cmd_forgetting(cfg, out);
    if (verify->parsed())
      return cmd_verify(cfg, out);
    if (canon->parsed())
      return cmd_canonicalize(cfg, out);
    if (dump->parsed())
      return cmd_dump_window_table(cfg, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const ResourceLimit& e) {
    err << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kDataFormat;
  } catch (const StructuralError& e) {
    err << "error: " << e.what() << '\n';
    return kDataFormat;
  } catch (const NoUniqueStationary& e) {
    err << "error: " << e.what() << '\n';
    return kDataFormat;
  } catch (const ContractViolation& e) {
    err << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  }
  return kConfig;
}

} // namespace bpec::cli
