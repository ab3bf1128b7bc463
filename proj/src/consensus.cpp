#include "p2plearn/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "p2plearn/inverse_learning.hpp"

namespace p2plearn {

namespace {

std::vector<AgentState> mix(const std::vector<AgentState>& xt, const TradeGraph& g) {
    const auto& w = g.weights();
    std::vector<AgentState> out(xt.size());
    for (ProsumerId i = 0; i < xt.size(); ++i) {
        AgentState next(xt[i].size());
        for (std::size_t c = 0; c < next.size(); ++c) next[c] = w(i, i) * xt[i][c];
        for (ProsumerId j : g.neighbors(i)) {
            for (std::size_t c = 0; c < next.size(); ++c) next[c] += w(i, j) * xt[j][c];
        }
        out[i] = std::move(next);
    }
    return out;
}

std::vector<AgentState> add_noise(const std::vector<AgentState>& x, std::vector<NoiseSchedule>& schedules,
                                  int round) {
    std::vector<AgentState> out = x;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto w = schedules[i].increment(round);
        for (std::size_t c = 0; c < out[i].size(); ++c) out[i][c] += w[c];
    }
    return out;
}

double max_change(const std::vector<AgentState>& a, const std::vector<AgentState>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double sq = 0.0;
        for (std::size_t c = 0; c < a[i].size(); ++c) sq += (a[i][c] - b[i][c]) * (a[i][c] - b[i][c]);
        worst = std::max(worst, std::sqrt(sq));
    }
    return worst;
}

void check_states(const std::vector<AgentState>& states, const TradeGraph& g) {
    if (states.size() != g.size()) throw Error(ErrorCode::InvalidArgument, "one state per graph node required");
    if (states.empty()) throw Error(ErrorCode::InvalidArgument, "consensus over zero agents");
    const std::size_t dim = states.front().size();
    for (const auto& s : states) {
        if (s.size() != dim) throw Error(ErrorCode::InvalidArgument, "agent states differ in dimension");
        for (double v : s) {
            if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite agent state");
        }
    }
}

ConsensusOutcome flood_min_max(const std::vector<AgentState>& init, const TradeGraph& g,
                               const ConsensusConfig& cfg) {
    ConsensusOutcome out;
    out.values = init;
    out.trace.tolerance = cfg.tol;
    out.trace.rounds.push_back(init);
    for (int r = 1; r <= cfg.max_iter; ++r) {
        auto next = out.values;
        for (ProsumerId i = 0; i < next.size(); ++i) {
            for (ProsumerId j : g.neighbors(i)) {
                next[i][0] = std::max(next[i][0], out.values[j][0]);
                next[i][1] = std::min(next[i][1], out.values[j][1]);
            }
        }
        const bool stable = next == out.values;
        out.values = std::move(next);
        out.trace.rounds.push_back(out.values);
        if (stable) {
            out.trace.converged_at = r;
            return out;
        }
    }
    throw NoConvergenceError("min-max flooding did not settle", std::move(out));
}

}  // namespace

void ConsensusConfig::validate() const {
    if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "consensus tolerance must be positive");
    if (max_iter < 1) throw Error(ErrorCode::InvalidArgument, "consensus max_iter must be >= 1");
    if (!(alpha_default > 0.0 && alpha_default < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "noise decay alpha must lie in (0, 1)");
    }
}

NoiseSchedule::NoiseSchedule(double alpha, std::size_t channels, std::uint64_t seed)
    : NoiseSchedule(alpha, channels,
                    [engine = std::mt19937_64(seed), dist = std::normal_distribution<double>(0.0, 1.0)]() mutable {
                        return dist(engine);
                    }) {}

NoiseSchedule::NoiseSchedule(double alpha, std::size_t channels, Source source)
    : alpha_(alpha), channels_(channels), source_(std::move(source)), last_zeta_(channels, 0.0) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "noise decay alpha must lie in (0, 1)");
}

std::vector<double> NoiseSchedule::increment(int round) {
    if (round != next_round_) {
        throw Error(ErrorCode::InvalidArgument, "noise requested for round " + std::to_string(round) +
                                                    ", expected " + std::to_string(next_round_));
    }
    std::vector<double> w(channels_);
    const double scale_now = std::pow(alpha_, round);
    const double scale_prev = round > 0 ? std::pow(alpha_, round - 1) : 0.0;
    for (std::size_t c = 0; c < channels_; ++c) {
        const double zeta = source_();
        w[c] = round == 0 ? zeta : scale_now * zeta - scale_prev * last_zeta_[c];
        last_zeta_[c] = zeta;
    }
    ++next_round_;
    return w;
}

std::vector<NoiseSchedule> make_noise_schedules(std::size_t agents, std::size_t channels, double alpha,
                                                std::uint64_t seed) {
    std::vector<NoiseSchedule> out;
    out.reserve(agents);
    for (ProsumerId i = 0; i < agents; ++i) out.emplace_back(alpha, channels, prosumer_seed(seed, i));
    return out;
}

void write_trace_csv(std::ostream& out, const ConsensusTrace& trace) {
    out << "round,agent_id,component_index,value\n";
    char buf[64];
    for (std::size_t r = 0; r < trace.rounds.size(); ++r) {
        const auto& agents = trace.rounds[r];
        for (std::size_t i = 0; i < agents.size(); ++i) {
            for (std::size_t c = 0; c < agents[i].size(); ++c) {
                std::snprintf(buf, sizeof buf, "%.17g", agents[i][c]);
                out << r << ',' << i << ',' << c << ',' << buf << '\n';
            }
        }
    }
}

std::vector<AgentState> consensus_round(const std::vector<AgentState>& states, const TradeGraph& g,
                                        std::vector<NoiseSchedule>* schedules,
                                        std::vector<AgentState>* transmitted) {
    check_states(states, g);
    std::vector<AgentState> xt = states;
    if (schedules != nullptr) {
        if (schedules->size() != states.size()) throw Error(ErrorCode::InvalidArgument, "one noise schedule per agent");
        xt = add_noise(states, *schedules, schedules->front().next_round());
    }
    auto next = mix(xt, g);
    if (transmitted != nullptr) *transmitted = std::move(xt);
    return next;
}

AgentState ConsensusOutcome::network_mean() const {
    AgentState mean(values.front().size(), 0.0);
    for (const auto& v : values)
        for (std::size_t c = 0; c < v.size(); ++c) mean[c] += v[c];
    for (auto& m : mean) m /= static_cast<double>(values.size());
    return mean;
}

double ConsensusOutcome::disagreement() const {
    double worst = 0.0;
    for (std::size_t c = 0; c < values.front().size(); ++c) {
        double lo = values.front()[c];
        double hi = lo;
        for (const auto& v : values) {
            lo = std::min(lo, v[c]);
            hi = std::max(hi, v[c]);
        }
        worst = std::max(worst, hi - lo);
    }
    return worst;
}

ConsensusOutcome run_consensus(const std::vector<AgentState>& init, const TradeGraph& g,
                               const ConsensusConfig& cfg, std::vector<NoiseSchedule>* schedules) {
    cfg.validate();
    check_states(init, g);
    if (!is_connected(g)) throw Error(ErrorCode::NotConnected, "consensus needs a connected graph");
    const bool masked = schedules != nullptr;
    if (masked && schedules->size() != init.size()) {
        throw Error(ErrorCode::InvalidArgument, "one noise schedule per agent");
    }

    ConsensusOutcome out;
    out.trace.tolerance = cfg.tol;
    out.trace.masked = masked;
    out.trace.rounds.push_back(init);

    std::vector<AgentState> x = init;
    std::vector<AgentState> xt = masked ? add_noise(x, *schedules, 0) : x;
    for (int r = 1; r <= cfg.max_iter; ++r) {
        auto x_next = mix(xt, g);
        auto xt_next = masked ? add_noise(x_next, *schedules, r) : x_next;
        const double change = max_change(xt_next, xt);
        x = std::move(x_next);
        xt = std::move(xt_next);
        out.trace.rounds.push_back(x);
        if (change <= cfg.tol && (!masked || r >= cfg.min_masked_rounds)) {
            out.trace.converged_at = r;
            out.values = std::move(x);
            return out;
        }
    }
    out.values = std::move(x);
    throw NoConvergenceError("consensus did not converge within " + std::to_string(cfg.max_iter) + " rounds",
                             std::move(out));
}

NegotiatedInterval negotiate_price_interval(const std::vector<PriceInterval>& intervals, const TradeGraph& g,
                                            const ConsensusConfig& cfg, NegotiationStrategy strategy) {
    if (intervals.size() != g.size()) throw Error(ErrorCode::InvalidArgument, "one price interval per agent");
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        if (!intervals[i].valid()) {
            throw Error(ErrorCode::InvalidArgument, "prosumer " + std::to_string(i) + " has an invalid price interval");
        }
    }
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        for (std::size_t j = i + 1; j < intervals.size(); ++j) {
            if (std::max(intervals[i].lower, intervals[j].lower) > std::min(intervals[i].upper, intervals[j].upper)) {
                throw Error(ErrorCode::NonOverlapping, "price intervals of prosumers " + std::to_string(i) + " and " +
                                                           std::to_string(j) + " do not overlap");
            }
        }
    }

    std::vector<AgentState> init;
    init.reserve(intervals.size());
    for (const auto& iv : intervals) init.push_back({iv.lower, iv.upper});

    NegotiatedInterval out;
    if (strategy == NegotiationStrategy::MinMax) {
        if (!is_connected(g)) throw Error(ErrorCode::NotConnected, "negotiation needs a connected graph");
        out.outcome = flood_min_max(init, g, cfg);
        out.interval = {out.outcome.values.front()[0], out.outcome.values.front()[1]};
    } else {
        out.outcome = run_consensus(init, g, cfg);
        const auto mean = out.outcome.network_mean();
        out.interval = {mean[0], mean[1]};
    }
    return out;
}

NegotiatedK negotiate_k(const std::vector<double>& local_ks, double xi, const TradeGraph& g,
                        const ConsensusConfig& cfg, double k_s, double k_b) {
    const double threshold = min_k(xi, k_s, k_b);
    std::vector<AgentState> init;
    init.reserve(local_ks.size());
    for (std::size_t i = 0; i < local_ks.size(); ++i) {
        if (!(local_ks[i] > threshold)) {
            throw Error(ErrorCode::InvalidLocalK, "prosumer " + std::to_string(i) + " proposed k = " +
                                                      std::to_string(local_ks[i]) + ", needs k > " +
                                                      std::to_string(threshold));
        }
        init.push_back({local_ks[i]});
    }
    NegotiatedK out;
    out.outcome = run_consensus(init, g, cfg);
    out.k = out.outcome.network_mean()[0];
    return out;
}

double price_from_average(const AgentState& avg) {
    if (avg.size() < 2) throw Error(ErrorCode::InvalidArgument, "price needs a two-component average");
    if (!(avg[1] > 0.0)) throw Error(ErrorCode::DegenerateDenominator, "average of 1/a must be positive");
    return avg[0] / avg[1];
}

}  // namespace p2plearn
