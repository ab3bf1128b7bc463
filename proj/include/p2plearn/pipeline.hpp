#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "p2plearn/consensus.hpp"
#include "p2plearn/inverse_learning.hpp"
#include "p2plearn/market.hpp"
#include "p2plearn/scenario.hpp"

namespace p2plearn {

struct PipelineConfig {
    ConsensusConfig consensus;
    /// Stopping tolerance of the masked clearing consensus. Every trade inherits
    /// the price error times sum(1/(2a)), so balance to 1e-9 needs a much
    /// tighter stop than the negotiation rounds.
    double clearing_tol = 1e-12;
    std::optional<double> k;  // skip the k negotiation and use this value
    double k_s = 1.0;
    double k_b = 1.0;
    NegotiationStrategy strategy = NegotiationStrategy::Average;
};

enum class SelectionRule { MultiSided, SingleBuyer, SingleSeller };

std::string_view to_string(SelectionRule rule) noexcept;

struct StepTimings {
    double negotiate_ms = 0.0;
    double aggregate_ms = 0.0;
    double select_ms = 0.0;
    double clear_ms = 0.0;
};

/// Everything one learning run produced. `timings` is wall-clock and is kept
/// out of the serialized report so that reports are reproducible byte for byte.
struct PipelineReport {
    std::string label;
    std::uint64_t seed = 0;
    std::vector<Role> roles;
    std::vector<PowerBounds> bounds;
    PriceInterval negotiated;
    double sum_sell_max = 0.0;
    double sum_buy_min = 0.0;
    double xi = 0.0;
    double k_min = 0.0;
    GlobalK k;
    SelectionRule rule = SelectionRule::MultiSided;
    std::vector<ParamIntervals> intervals;
    std::vector<CostParams> params;
    AgentState masked_limit;  // network mean of the masked states at stop
    ClearingResult clearing;
    double analytic_price = 0.0;
    double masked_price_error = 0.0;
    ConsensusTrace negotiation_trace;
    ConsensusTrace clearing_trace;
    StepTimings timings;
};

struct BoundAggregate {
    double sum_sell_max = 0.0;
    double sum_buy_min = 0.0;
    double xi = 0.0;
    ConsensusOutcome outcome;
};

/// Network sums of seller caps and buyer floors via plain consensus (network
/// mean times n), and the resulting demand/supply ratio.
BoundAggregate aggregate_bounds(const MarketScenario& scenario, const TradeGraph& g, const ConsensusConfig& cfg);

/// Graph with Metropolis weights for a scenario's topology.
TradeGraph scenario_graph(const MarketScenario& scenario);

/// Full learning run for one time step: negotiate the price band, aggregate
/// the bounds and agree on k, pick cost parameters locally, then clear through
/// masked consensus. Errors carry the failing step in Error::step().
PipelineReport run_algorithm1(const MarketScenario& scenario, const PipelineConfig& cfg, std::uint64_t seed);

enum class HourStatus { Completed, Skipped, Failed };

struct HourOutcome {
    int hour = 0;
    HourStatus status = HourStatus::Completed;
    std::optional<PipelineReport> report;
    std::string message;  // skip reason or error text
    std::optional<ErrorCode> error;
};

/// Independent runs for every hour with the same seed. Hours with an empty
/// side are skipped; failures are recorded and the day continues.
std::vector<HourOutcome> run_day(const std::vector<MarketScenario>& hours, const PipelineConfig& cfg,
                                 std::uint64_t seed);

/// Sum over completed hours of the energy sold in that hour.
double daily_traded_energy(const std::vector<HourOutcome>& day);

struct AmplificationRecord {
    double factor = 1.0;
    std::vector<CostParams> params_after;
    ClearingResult before;
    ClearingResult after;
    std::vector<ProsumerId> not_increased;  // |trade| did not strictly grow

    double sold_before() const noexcept;
    double sold_after() const noexcept;
};

/// Shrinks every prosumer's a toward its interval's lower end and re-clears
/// with the closed form.
AmplificationRecord amplification_experiment(const PipelineReport& report, double factor);

}  // namespace p2plearn
