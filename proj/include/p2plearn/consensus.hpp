#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <vector>

#include "p2plearn/error.hpp"
#include "p2plearn/trade_graph.hpp"
#include "p2plearn/types.hpp"

namespace p2plearn {

/// One agent's consensus vector.
using AgentState = std::vector<double>;

struct ConsensusConfig {
    double tol = 1e-9;
    int max_iter = 10'000;
    double alpha_default = 0.8;
    int min_masked_rounds = 20;

    void validate() const;
};

/// Geometrically decaying mask for one agent. Per channel l the increment at
/// round k is zeta_l(0) for k = 0 and alpha^k zeta_l(k) - alpha^(k-1) zeta_l(k-1)
/// afterwards, so the cumulative noise after K rounds telescopes to
/// alpha^K zeta_l(K). Rounds must be requested in order 0, 1, 2, ...
class NoiseSchedule {
public:
    using Source = std::function<double()>;

    /// Standard normal draws from a seeded engine.
    NoiseSchedule(double alpha, std::size_t channels, std::uint64_t seed);
    /// Custom draw source, used to pin the stream in tests.
    NoiseSchedule(double alpha, std::size_t channels, Source source);

    std::vector<double> increment(int round);

    double alpha() const noexcept { return alpha_; }
    int next_round() const noexcept { return next_round_; }
    const std::vector<double>& last_draw() const noexcept { return last_zeta_; }

private:
    double alpha_;
    std::size_t channels_;
    Source source_;
    std::vector<double> last_zeta_;
    int next_round_ = 0;
};

std::vector<NoiseSchedule> make_noise_schedules(std::size_t agents, std::size_t channels, double alpha,
                                                std::uint64_t seed);

/// Per-round agent states, including the initial one.
struct ConsensusTrace {
    std::vector<std::vector<AgentState>> rounds;
    std::optional<int> converged_at;
    double tolerance = 0.0;
    bool masked = false;

    int rounds_executed() const noexcept { return static_cast<int>(rounds.size()) - 1; }
};

/// Writes `round,agent_id,component_index,value` rows.
void write_trace_csv(std::ostream& out, const ConsensusTrace& trace);

/// One synchronous round x_i <- w_ii x~_i + sum_j w_ij x~_j. When `masked`, each
/// x~_i is x_i plus the agent's next noise increment; otherwise x~ = x. When
/// `transmitted` is non-null it receives the x~ values.
std::vector<AgentState> consensus_round(const std::vector<AgentState>& states, const TradeGraph& g,
                                        std::vector<NoiseSchedule>* schedules,
                                        std::vector<AgentState>* transmitted = nullptr);

struct ConsensusOutcome {
    std::vector<AgentState> values;
    ConsensusTrace trace;

    /// Component-wise mean over agents of the final values.
    AgentState network_mean() const;
    /// Largest component-wise spread between any two agents.
    double disagreement() const;
};

/// Thrown when the iteration budget runs out; still carries the trace.
class NoConvergenceError : public Error {
public:
    NoConvergenceError(const std::string& message, ConsensusOutcome outcome)
        : Error(ErrorCode::NoConvergence, message), outcome_(std::move(outcome)) {}
    const ConsensusOutcome& outcome() const noexcept { return outcome_; }

private:
    ConsensusOutcome outcome_;
};

/// Iterates rounds until every agent's transmitted vector moves by at most
/// `cfg.tol` (2-norm) between rounds. Masked runs need `schedules` (one per
/// agent) and do at least `cfg.min_masked_rounds` rounds.
ConsensusOutcome run_consensus(const std::vector<AgentState>& init, const TradeGraph& g,
                               const ConsensusConfig& cfg, std::vector<NoiseSchedule>* schedules = nullptr);

enum class NegotiationStrategy { Average, MinMax };

struct NegotiatedInterval {
    PriceInterval interval;
    ConsensusOutcome outcome;
};

/// Common price band. Average: network mean of lowers and uppers via plain
/// consensus. MinMax: max of lowers and min of uppers by neighbour flooding.
/// Throws NonOverlapping naming the first pair of disjoint intervals.
NegotiatedInterval negotiate_price_interval(const std::vector<PriceInterval>& intervals, const TradeGraph& g,
                                            const ConsensusConfig& cfg,
                                            NegotiationStrategy strategy = NegotiationStrategy::Average);

struct NegotiatedK {
    double k = 0.0;
    ConsensusOutcome outcome;
};

/// Average of the agents' proposals. Each proposal must exceed
/// min_k(xi, k_s, k_b); InvalidLocalK names the first one that does not.
NegotiatedK negotiate_k(const std::vector<double>& local_ks, double xi, const TradeGraph& g,
                        const ConsensusConfig& cfg, double k_s = 1.0, double k_b = 1.0);

/// avg[0] / avg[1]; throws DegenerateDenominator unless avg[1] > 0.
double price_from_average(const AgentState& avg);

}  // namespace p2plearn
