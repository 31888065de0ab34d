#include "bpec/io.hpp"

#include "bpec/errors.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace bpec::io {

double round12(double v)
{
  if (!std::isfinite(v))
    return v;
  return std::strtod(fmt12(v).c_str(), nullptr);
}

std::string fmt12(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string read_file(const std::string& path, const char* what)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ConfigError(std::string(what) + " file not found: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::string line_of(const std::string& text, std::size_t byte)
{
  std::size_t line = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i)
    if (text[i] == '\n')
      ++line;
  return "line " + std::to_string(line);
}

Json parse_document(const std::string& text)
{
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    // Byte offsets point one past the offending character.
    throw FormatError(line_of(text, e.byte > 0 ? e.byte - 1 : 0), "invalid JSON");
  }
}

std::string field(const std::string& base, std::size_t i)
{
  return base + "[" + std::to_string(i) + "]";
}

const Json& require(const Json& obj, const char* key)
{
  const auto it = obj.find(key);
  if (it == obj.end())
    throw FormatError(key, "missing field");
  return *it;
}

double number_at(const Json& v, const std::string& where)
{
  if (!v.is_number())
    throw FormatError(where, "expected a number");
  return v.get<double>();
}

std::vector<double> probability_row(const Json& v, const std::string& where, std::size_t width,
                                    double tol = 1e-12)
{
  if (!v.is_array())
    throw FormatError(where, "expected an array");
  if (v.size() != width)
    throw FormatError(where, "expected " + std::to_string(width) + " entries, found " +
                               std::to_string(v.size()));
  std::vector<double> row(width);
  double sum = 0;
  for (std::size_t k = 0; k < width; ++k) {
    const auto at = field(where, k);
    row[k] = number_at(v[k], at);
    if (!(row[k] >= 0 && row[k] <= 1))
      throw FormatError(at, "probability outside [0,1]");
    sum += row[k];
  }
  if (!(std::abs(sum - 1.0) <= tol))
    throw FormatError(where, "row not stochastic (sum " + fmt12(sum) + ")");
  return row;
}

} // namespace

ChannelModel parse_model(const std::string& text)
{
  const auto doc = parse_document(text);
  if (!doc.is_object())
    throw FormatError("(root)", "expected a JSON object");

  const auto& states_v = require(doc, "states");
  if (!states_v.is_number_integer() || states_v.get<long long>() < 1)
    throw FormatError("states", "expected a positive integer");
  const auto n = static_cast<std::size_t>(states_v.get<long long>());

  const auto& tr = require(doc, "transition");
  if (!tr.is_array() || tr.size() != n)
    throw FormatError("transition", "expected " + std::to_string(n) + " rows");
  std::vector<std::vector<double>> transition;
  for (std::size_t i = 0; i < n; ++i)
    transition.push_back(probability_row(tr[i], field("transition", i), n));

  const auto& em = require(doc, "emission");
  if (!em.is_array() || em.size() != n)
    throw FormatError("emission", "expected " + std::to_string(n) + " rows");
  std::vector<EmissionRow> emission;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = probability_row(em[i], field("emission", i), kNumPatterns);
    emission.push_back({row[0], row[1], row[2], row[3]});
  }

  std::vector<std::string> labels;
  if (const auto it = doc.find("labels"); it != doc.end()) {
    if (!it->is_array() || it->size() != n)
      throw FormatError("labels", "expected " + std::to_string(n) + " strings");
    for (std::size_t i = 0; i < n; ++i) {
      if (!(*it)[i].is_string())
        throw FormatError(field("labels", i), "expected a string");
      labels.push_back((*it)[i].get<std::string>());
    }
  }
  return ChannelModel(std::move(transition), std::move(emission), std::move(labels));
}

ChannelModel load_model(const std::string& path)
{
  return parse_model(read_file(path, "model"));
}

Json model_to_json(const ChannelModel& model)
{
  Json j;
  const auto n = model.num_states();
  j["states"] = n;
  Json tr = Json::array();
  Json em = Json::array();
  for (std::size_t s = 0; s < n; ++s) {
    tr.push_back(std::vector<double>(model.transition_row(s).begin(), model.transition_row(s).end()));
    const auto& e = model.emission_row(s);
    em.push_back(std::vector<double>(e.begin(), e.end()));
  }
  j["transition"] = tr;
  j["emission"] = em;
  if (!model.labels().empty())
    j["labels"] = model.labels();
  return j;
}

Json to_json(const ActionDistribution& dist)
{
  Json j;
  j["L"] = dist.window;
  Json rows = Json::array();
  for (std::size_t z = 0; z < dist.table.size(); ++z) {
    Json p = Json::array();
    for (double v : dist.table[z])
      p.push_back(round12(v));
    rows.push_back({{"window", window_key(z, dist.window)}, {"p", p}});
  }
  j["windows"] = rows;
  return j;
}

ActionDistribution parse_distribution(const std::string& text)
{
  const auto doc = parse_document(text);
  if (!doc.is_object())
    throw FormatError("(root)", "expected a JSON object");
  const auto& l = require(doc, "L");
  if (!l.is_number_integer() || l.get<int>() < 1 || l.get<int>() > kDefaultWindowCap)
    throw FormatError("L", "expected an integer in [1, " + std::to_string(kDefaultWindowCap) + "]");
  ActionDistribution dist;
  dist.window = l.get<int>();
  dist.table.assign(std::size_t{1} << (2 * dist.window), ActionRow{});
  std::vector<bool> seen(dist.table.size(), false);

  const auto& rows = require(doc, "windows");
  if (!rows.is_array() || rows.size() != dist.table.size())
    throw FormatError("windows", "expected " + std::to_string(dist.table.size()) + " rows");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto where = field("windows", i);
    const auto& r = rows[i];
    if (!r.is_object() || !r.contains("window") || !r["window"].is_string())
      throw FormatError(where + ".window", "expected a window key string");
    std::size_t z = 0;
    try {
      z = parse_window_key(r["window"].get<std::string>(), dist.window);
    } catch (const FormatError& e) {
      throw FormatError(where + ".window", e.what());
    }
    if (seen[z])
      throw FormatError(where + ".window", "duplicate window");
    seen[z] = true;
    if (!r.contains("p"))
      throw FormatError(where + ".p", "missing field");
    // Rows written with 12 significant digits may miss 1 by a few 1e-12.
    auto row = probability_row(r["p"], where + ".p", kNumActions, 1e-9);
    double sum = 0;
    for (double v : row) sum += v;
    for (std::size_t a = 0; a < row.size(); ++a) dist.table[z][a] = row[a] / sum;
  }
  return dist;
}

Json to_json(const RegionWitness& w)
{
  Json j;
  j["L"] = w.window;
  j["R1"] = round12(w.R1);
  j["R2"] = round12(w.R2);
  Json rows = Json::array();
  for (std::size_t z = 0; z < w.x.size(); ++z)
    rows.push_back(
      {{"window", window_key(z, w.window)}, {"x", round12(w.x[z])}, {"y", round12(w.y[z])}});
  j["windows"] = rows;
  return j;
}

Json to_json(const Sandwich& s)
{
  Json j;
  j["sigma_available"] = s.sigma_available;
  j["slack"] = round12(s.slack);
  j["inner"] = s.inner ? Json(round12(*s.inner)) : Json(nullptr);
  j["nominal"] = round12(s.nominal);
  j["outer"] = s.outer ? Json(round12(*s.outer)) : Json(nullptr);
  return j;
}

Json to_json(const DecodeResult& d)
{
  Json j;
  j["passed"] = d.passed();
  j["checked"] = d.checked;
  for (std::size_t r = 0; r < 2; ++r) {
    Json rx;
    rx["ok"] = d.ok[r];
    rx["counterexample"] = d.counterexample[r] ? Json(*d.counterexample[r]) : Json(nullptr);
    j[r == 0 ? "rx1" : "rx2"] = rx;
  }
  return j;
}

namespace {

Json pair(double a, double b)
{
  return Json::array({round12(a), round12(b)});
}

template <class T>
Json pair_int(const std::array<T, 2>& v)
{
  return Json::array({v[0], v[1]});
}

} // namespace

Json to_json(const SimReport& r)
{
  Json j;
  j["scheduler"] = to_string(r.scheduler);
  j["rates"] = pair(r.R1, r.R2);
  j["slots"] = r.slots;
  j["seed"] = r.seed;
  j["warmup"] = r.warmup;
  j["checkpoint_every"] = r.checkpoint_every;
  j["arrivals"] = pair_int(r.arrivals);
  j["delivered"] = pair_int(r.delivered);
  j["in_system"] = pair_int(r.in_system);
  j["arrival_rate"] = pair(r.arrival_rate[0], r.arrival_rate[1]);
  j["throughput"] = pair(r.throughput[0], r.throughput[1]);
  Json hist;
  hist["idle"] = r.action_histogram[0];
  for (int a = 1; a <= kNumActions; ++a)
    hist[std::to_string(a)] = r.action_histogram[static_cast<std::size_t>(a)];
  j["actions"] = hist;
  j["substitutions"] = r.substitutions;
  j["conservation_ok"] = r.conservation_ok;
  j["slope"] = round12(r.slope);
  j["mean_backlog"] = round12(r.mean_backlog);
  j["backlog_bound"] = round12(r.backlog_bound);
  j["verdict"] = to_string(r.verdict);
  j["decode"] = r.decode ? to_json(*r.decode) : Json(nullptr);
  Json slots = Json::array(), totals = Json::array();
  for (const auto& cp : r.checkpoints) {
    slots.push_back(cp.slot);
    totals.push_back(cp.total);
  }
  j["series"] = {{"slot", slots}, {"total", totals}};
  return j;
}

void write_window_table_csv(std::ostream& out, const WindowTable& table)
{
  out << "window,prob,eps1,eps2,eps12,eps_n12,eps1_n2\n";
  for (std::size_t z = 0; z < table.size(); ++z) {
    const auto& r = table.rows[z];
    out << window_key(z, table.window) << ',' << fmt12(r.prob) << ',' << fmt12(r.stats.eps1)
        << ',' << fmt12(r.stats.eps2) << ',' << fmt12(r.stats.eps12) << ','
        << fmt12(r.stats.eps_n12) << ',' << fmt12(r.stats.eps1_n2) << '\n';
  }
}

void write_pareto_csv(std::ostream& out, const std::vector<ParetoPoint>& points)
{
  out << "lambda,R1,R2,status\n";
  for (const auto& p : points)
    out << fmt12(p.lambda) << ',' << fmt12(p.R1) << ',' << fmt12(p.R2) << ','
        << lp::to_string(p.status) << '\n';
}

void write_slot_csv(std::ostream& out, const std::vector<SlotLine>& lines)
{
  out << "slot,action,z1,z2,totalQ,delivered1,delivered2\n";
  for (const auto& l : lines)
    out << l.slot << ',' << static_cast<int>(l.action) << ',' << int{l.z.z1} << ','
        << int{l.z.z2} << ',' << l.total << ',' << l.delivered[0] << ',' << l.delivered[1]
        << '\n';
}

Json to_json(const TraceLine& line)
{
  Json j;
  j["slot"] = line.slot;
  j["action"] = static_cast<int>(line.action);
  j["combo"] = line.combo;
  j["received_rx1"] = line.received_rx1;
  j["received_rx2"] = line.received_rx2;
  j["delivered_rx1"] = line.delivered[0];
  j["delivered_rx2"] = line.delivered[1];
  return j;
}

void write_trace(std::ostream& out, const std::vector<TraceLine>& trace)
{
  for (const auto& line : trace)
    out << to_json(line).dump() << '\n';
}

namespace {

std::vector<PacketId> id_list(const Json& v, const std::string& where)
{
  if (!v.is_array())
    throw FormatError(where, "expected an array of packet ids");
  std::vector<PacketId> ids;
  for (const auto& e : v) {
    if (!e.is_number_unsigned())
      throw FormatError(where, "packet ids must be nonnegative integers");
    ids.push_back(e.get<PacketId>());
  }
  return ids;
}

bool flag(const Json& obj, const char* key, const std::string& where)
{
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_boolean())
    throw FormatError(where, std::string("field '") + key + "' must be a boolean");
  return it->get<bool>();
}

} // namespace

std::vector<TraceLine> read_trace(std::istream& in)
{
  std::vector<TraceLine> trace;
  std::string text;
  std::size_t lineno = 0;
  while (std::getline(in, text)) {
    ++lineno;
    if (text.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    const auto where = "line " + std::to_string(lineno);
    Json j;
    try {
      j = Json::parse(text);
    } catch (const Json::parse_error&) {
      throw FormatError(where, "invalid JSON");
    }
    if (!j.is_object())
      throw FormatError(where, "expected a JSON object");
    TraceLine line;
    if (!j.contains("slot") || !j["slot"].is_number_unsigned())
      throw FormatError(where, "field 'slot' must be a nonnegative integer");
    line.slot = j["slot"].get<std::uint64_t>();
    if (!j.contains("action") || !j["action"].is_number_integer() ||
        j["action"].get<int>() < 1 || j["action"].get<int>() > kNumActions)
      throw FormatError(where, "field 'action' must be an integer in 1..5");
    line.action = static_cast<Action>(j["action"].get<int>());
    if (!j.contains("combo"))
      throw FormatError(where, "missing field 'combo'");
    line.combo = id_list(j["combo"], where);
    line.received_rx1 = flag(j, "received_rx1", where);
    line.received_rx2 = flag(j, "received_rx2", where);
    if (j.contains("delivered_rx1"))
      line.delivered[0] = id_list(j["delivered_rx1"], where);
    if (j.contains("delivered_rx2"))
      line.delivered[1] = id_list(j["delivered_rx2"], where);
    trace.push_back(std::move(line));
  }
  return trace;
}

} // namespace bpec::io
