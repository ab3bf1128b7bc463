#include "p2plearn/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>

namespace p2plearn {

namespace {

constexpr std::uint64_t kNoiseStream = 0x6d61736b;  // independent of parameter draws
constexpr std::uint64_t kKProposalStream = 0x6b6b6b6b;

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string format_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

// Runs one stage and re-labels any library error with the stage name.
template <typename F>
auto in_step(const char* step, F&& body) {
    try {
        return body();
    } catch (const Error& e) {
        throw Error(e.code(), std::string(step) + ": " + e.what(), step);
    }
}

// Single-sided markets use the one-buyer / one-seller intervals. The lone prosumer picks
// its intercept first, as a fraction t of the band above the lower end. The
// buyer's curvature interval is non-empty iff t > (1 + 1/xi)/k and the seller's
// iff t < (1 + xi)/k - xi; t is drawn from the middle of the admissible part.
void select_single_sided(PipelineReport& report, std::uint64_t seed) {
    const std::size_t n = report.roles.size();
    const Role lone_role = report.rule == SelectionRule::SingleBuyer ? Role::Buyer : Role::Seller;
    ProsumerId lone = 0;
    std::vector<ProsumerId> others;
    std::vector<PowerBounds> other_bounds;
    for (ProsumerId i = 0; i < n; ++i) {
        if (report.roles[i] == lone_role) {
            lone = i;
        } else {
            others.push_back(i);
            other_bounds.push_back(report.bounds[i]);
        }
    }

    const double k = report.k.k;
    const double xi = report.xi;
    const auto& price = report.negotiated;
    const double w = price.width();
    SingleSideIntervals iv;
    double lone_b = 0.0;
    if (lone_role == Role::Buyer) {
        const double threshold = (1.0 + 1.0 / xi) / k;
        const double t_lo = threshold < 1.0 ? std::max(1.0 / k, 0.5 * (threshold + 1.0)) : 1.0 / k;
        lone_b = sample_bound({price.lower + t_lo * w, price.upper, true, false}, prosumer_seed(seed, lone));
        iv = param_intervals_single_buyer(k, price, other_bounds, report.bounds[lone], lone_b);
    } else {
        const double threshold = (1.0 + xi) / k - xi;
        const double t_hi = threshold > 0.0 ? std::min(1.0 / k, 0.5 * threshold) : 1.0 / k;
        lone_b = sample_bound({price.lower, price.lower + t_hi * w, false, true}, prosumer_seed(seed, lone));
        iv = param_intervals_single_seller(k, price, other_bounds, report.bounds[lone], lone_b);
    }

    report.intervals.assign(n, {});
    report.params.assign(n, {});
    report.intervals[lone] = iv.single;
    report.params[lone] = {sample_bound(iv.single.a, prosumer_seed(seed, lone) + 1), lone_b};
    for (std::size_t m = 0; m < others.size(); ++m) {
        const ProsumerId i = others[m];
        report.intervals[i] = iv.many[m];
        report.params[i] = sample_params(iv.many[m], prosumer_seed(seed, i));
    }
}

}  // namespace

std::string_view to_string(SelectionRule rule) noexcept {
    switch (rule) {
        case SelectionRule::MultiSided: return "multi-sided";
        case SelectionRule::SingleBuyer: return "single-buyer";
        case SelectionRule::SingleSeller: return "single-seller";
    }
    return "unknown";
}

TradeGraph scenario_graph(const MarketScenario& scenario) {
    return metropolis_weights(build_bipartite(scenario.roles(), scenario.topology));
}

BoundAggregate aggregate_bounds(const MarketScenario& scenario, const TradeGraph& g, const ConsensusConfig& cfg) {
    if (!scenario.has_both_sides()) throw Error(ErrorCode::MissingSide, "bound aggregation needs both sides");
    std::vector<AgentState> init;
    init.reserve(scenario.size());
    for (const auto& p : scenario.prosumers) {
        init.push_back(p.role == Role::Seller ? AgentState{p.bound_kw, 0.0} : AgentState{0.0, p.bound_kw});
    }
    BoundAggregate out;
    out.outcome = run_consensus(init, g, cfg);
    const auto mean = out.outcome.network_mean();
    const auto n = static_cast<double>(scenario.size());
    out.sum_sell_max = mean[0] * n;
    out.sum_buy_min = mean[1] * n;
    out.xi = -out.sum_buy_min / out.sum_sell_max;
    return out;
}

PipelineReport run_algorithm1(const MarketScenario& scenario, const PipelineConfig& cfg, std::uint64_t seed) {
    in_step("validation", [&] {
        scenario.validate();
        cfg.consensus.validate();
        if (!(cfg.clearing_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "clearing tolerance must be positive");
        if (!scenario.has_both_sides()) throw Error(ErrorCode::MissingSide, "market needs a seller and a buyer");
        return 0;
    });

    PipelineReport report;
    report.label = scenario.meta.label;
    report.seed = seed;
    report.roles = scenario.roles();
    report.bounds = scenario.bounds();
    const std::size_t n = scenario.size();
    const std::size_t sellers = count_role(report.roles, Role::Seller);
    const std::size_t buyers = n - sellers;

    const TradeGraph g = in_step("graph", [&] { return scenario_graph(scenario); });

    auto t0 = Clock::now();
    auto negotiated = in_step("step 1 (price band negotiation)", [&] {
        return negotiate_price_interval(scenario.price_intervals(), g, cfg.consensus, cfg.strategy);
    });
    report.negotiated = negotiated.interval;
    report.negotiation_trace = std::move(negotiated.outcome.trace);
    report.timings.negotiate_ms = elapsed_ms(t0);

    t0 = Clock::now();
    in_step("bound aggregation", [&] {
        const auto agg = aggregate_bounds(scenario, g, cfg.consensus);
        report.sum_sell_max = agg.sum_sell_max;
        report.sum_buy_min = agg.sum_buy_min;
        report.xi = agg.xi;
        report.k_min = std::max(min_k(report.xi, cfg.k_s, cfg.k_b), 3.0);
        report.k = {0.0, cfg.k_s, cfg.k_b};
        if (buyers == 1) {
            report.rule = SelectionRule::SingleBuyer;
        } else if (sellers == 1) {
            report.rule = SelectionRule::SingleSeller;
        }
        if (report.rule != SelectionRule::MultiSided && cfg.k) {
            report.k.k = *cfg.k;
        } else if (report.rule == SelectionRule::SingleSeller) {
            // The lone seller's curvature interval needs k < 1 + 1/xi.
            report.k.k = 1.0 + 0.5 / report.xi;
        } else if (cfg.k) {
            report.k.k = *cfg.k;
            if (!report.k.valid() || !check_global_condition(report.k, report.xi)) {
                throw Error(ErrorCode::GlobalConditionViolated,
                            "k = " + format_number(*cfg.k) +
                                " violates the global condition 2/(k_b (k-2)) < xi < k_s (k-2)/2 at xi = " +
                                format_number(report.xi) + " (need k > " + format_number(report.k_min) + ")");
            }
        } else {
            std::mt19937_64 rng(seed ^ kKProposalStream);
            std::uniform_real_distribution<double> inflate(1.01, 1.10);
            std::vector<double> proposals(n);
            for (auto& k : proposals) k = report.k_min * inflate(rng);
            report.k.k = negotiate_k(proposals, report.xi, g, cfg.consensus, cfg.k_s, cfg.k_b).k;
        }
        return 0;
    });
    report.timings.aggregate_ms = elapsed_ms(t0);

    t0 = Clock::now();
    in_step("step 2 (parameter selection)", [&] {
        if (report.rule != SelectionRule::MultiSided) {
            select_single_sided(report, seed);
        } else {
            report.intervals.reserve(n);
            report.params.reserve(n);
            for (ProsumerId i = 0; i < n; ++i) {
                report.intervals.push_back(
                    param_intervals_theorem2(report.k, report.negotiated, report.bounds[i], report.roles[i]));
                report.params.push_back(sample_params(report.intervals.back(), prosumer_seed(seed, i)));
            }
        }
        return 0;
    });
    report.timings.select_ms = elapsed_ms(t0);

    t0 = Clock::now();
    in_step("step 3 (masked price negotiation)", [&] {
        std::vector<AgentState> init;
        init.reserve(n);
        for (const auto& p : report.params) init.push_back({p.b / p.a, 1.0 / p.a});
        auto schedules = make_noise_schedules(n, 2, cfg.consensus.alpha_default, seed ^ kNoiseStream);
        ConsensusConfig clearing_cfg = cfg.consensus;
        clearing_cfg.tol = cfg.clearing_tol;
        auto outcome = run_consensus(init, g, clearing_cfg, &schedules);
        report.masked_limit = outcome.network_mean();
        report.clearing_trace = std::move(outcome.trace);

        auto& clearing = report.clearing;
        clearing.lambda_star = price_from_average(report.masked_limit);
        clearing.trades.clear();
        for (const auto& p : report.params) clearing.trades.push_back(optimal_trade(p, clearing.lambda_star));
        clearing.violations = check_feasibility(clearing.trades, report.bounds, report.roles);
        clearing.feasible = clearing.violations.empty();

        report.analytic_price = clearing_price(report.params);
        report.masked_price_error = std::abs(clearing.lambda_star - report.analytic_price);
        return 0;
    });
    report.timings.clear_ms = elapsed_ms(t0);
    return report;
}

std::vector<HourOutcome> run_day(const std::vector<MarketScenario>& hours, const PipelineConfig& cfg,
                                 std::uint64_t seed) {
    std::vector<HourOutcome> day;
    day.reserve(hours.size());
    for (std::size_t h = 0; h < hours.size(); ++h) {
        HourOutcome out;
        out.hour = static_cast<int>(h);
        const auto roles = hours[h].roles();
        if (count_role(roles, Role::Seller) == 0 || count_role(roles, Role::Buyer) == 0) {
            out.status = HourStatus::Skipped;
            out.message = count_role(roles, Role::Seller) == 0 ? "no sellers" : "no buyers";
        } else {
            try {
                out.report = run_algorithm1(hours[h], cfg, seed);
            } catch (const Error& e) {
                out.status = HourStatus::Failed;
                out.message = e.what();
                out.error = e.code();
            }
        }
        day.push_back(std::move(out));
    }
    return day;
}

double daily_traded_energy(const std::vector<HourOutcome>& day) {
    double total = 0.0;
    for (const auto& h : day) {
        if (!h.report) continue;
        for (double t : h.report->clearing.trades) total += std::max(t, 0.0);
    }
    return total;
}

double AmplificationRecord::sold_before() const noexcept {
    double s = 0.0;
    for (double t : before.trades) s += std::max(t, 0.0);
    return s;
}

double AmplificationRecord::sold_after() const noexcept {
    double s = 0.0;
    for (double t : after.trades) s += std::max(t, 0.0);
    return s;
}

AmplificationRecord amplification_experiment(const PipelineReport& report, double factor) {
    AmplificationRecord rec;
    rec.factor = factor;
    rec.before = clear_market(report.params, report.bounds, report.roles);
    rec.params_after.reserve(report.params.size());
    for (std::size_t i = 0; i < report.params.size(); ++i) {
        rec.params_after.push_back(amplify_params(report.params[i], report.intervals[i], factor));
    }
    rec.after = clear_market(rec.params_after, report.bounds, report.roles);
    for (ProsumerId i = 0; i < rec.before.trades.size(); ++i) {
        if (!(std::abs(rec.after.trades[i]) > std::abs(rec.before.trades[i]))) rec.not_increased.push_back(i);
    }
    return rec;
}

}  // namespace p2plearn
