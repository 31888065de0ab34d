#pragma once

#include "bpec/capacity_region.hpp"
#include "bpec/hmm_filter.hpp"
#include "bpec/markov_channel.hpp"
#include "bpec/queue_sim.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace bpec::io {

using Json = nlohmann::ordered_json;

/// Value rounded to 12 significant digits.
double round12(double v);

/// "%.12g" formatting used by every CSV writer.
std::string fmt12(double v);

std::string read_file(const std::string& path, const char* what);

/// Parses a channel model document. Syntax errors name the line; schema and
/// stochasticity violations name the offending field (e.g. "transition[1]").
ChannelModel parse_model(const std::string& text);

/// Throws ConfigError("model file not found: ...") for a missing path.
ChannelModel load_model(const std::string& path);

Json model_to_json(const ChannelModel& model);

Json to_json(const ActionDistribution& dist);
ActionDistribution parse_distribution(const std::string& text);

Json to_json(const RegionWitness& witness);
Json to_json(const Sandwich& s);
Json to_json(const DecodeResult& d);
Json to_json(const SimReport& report);

void write_window_table_csv(std::ostream& out, const WindowTable& table);
void write_pareto_csv(std::ostream& out, const std::vector<ParetoPoint>& points);
void write_slot_csv(std::ostream& out, const std::vector<SlotLine>& lines);

Json to_json(const TraceLine& line);
void write_trace(std::ostream& out, const std::vector<TraceLine>& trace);

/// One JSON object per non-empty line; errors carry "line N".
std::vector<TraceLine> read_trace(std::istream& in);

} // namespace bpec::io
