#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "p2plearn/pipeline.hpp"
#include "p2plearn/scenario.hpp"

namespace p2plearn {

/// Scenario document:
///
///   {"format_version": 1,
///    "meta": {"n": 2, "label": "...", "currency": "JPY/kWh"},
///    "prosumers": [{"id": 0, "role": "seller", "bound_kw": 2.0,
///                   "price_lo": 20.1, "price_hi": 23.0}, ...],
///    "topology": {"kind": "complete"} | {"kind": "random", "degree": 4, "seed": 1}}
///
/// `bound_kw` is the seller cap (> 0) or the buyer floor (< 0). Malformed JSON
/// raises ParseError with the byte offset; structural problems raise
/// SchemaError naming the offending prosumer.
std::string scenario_to_json(const MarketScenario& scenario);
MarketScenario scenario_from_json(const std::string& text);

MarketScenario load_scenario(const std::filesystem::path& path);
void save_scenario(const std::filesystem::path& path, const MarketScenario& scenario);

/// Report document. Traces are summarized (rounds executed, stop round); the
/// full per-round states go to CSV. Timings are not written.
std::string report_to_json(const PipelineReport& report);
PipelineReport report_from_json(const std::string& text);

PipelineReport load_report(const std::filesystem::path& path);
void save_report(const std::filesystem::path& path, const PipelineReport& report);

/// {"format_version": 1, "params": [{"id": 0, "a": 0.1, "b": 20.0}, ...]}
std::vector<CostParams> load_params(const std::filesystem::path& path);
void save_params(const std::filesystem::path& path, const std::vector<CostParams>& params);

void save_trace(const std::filesystem::path& path, const ConsensusTrace& trace);

/// Writes `path.tmp` and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace p2plearn
