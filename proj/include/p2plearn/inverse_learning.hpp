#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "p2plearn/types.hpp"

namespace p2plearn {

/// Global interval-analysis parameters shared by every prosumer.
struct GlobalK {
    double k = 0.0;
    double k_s = 1.0;
    double k_b = 1.0;

    /// k > 3, 0 < k_s < 2, 0 < k_b < 2.
    bool valid() const noexcept;
};

/// One real interval with independently open or closed ends. `hi` may be
/// +infinity (always open).
struct Bound {
    double lo = 0.0;
    double hi = 0.0;
    bool lo_open = false;
    bool hi_open = false;

    bool contains(double x) const noexcept;
    bool empty() const noexcept;
    bool operator==(const Bound&) const = default;
};

/// Admissible cost parameters for one prosumer.
struct ParamIntervals {
    Bound b;
    Bound a;

    bool contains(const CostParams& p) const noexcept { return b.contains(p.b) && a.contains(p.a); }
    bool operator==(const ParamIntervals&) const = default;
};

/// xi = (-sum of buyer floors) / (sum of seller caps).
double demand_supply_ratio(const std::vector<PowerBounds>& bounds, const std::vector<Role>& roles);

/// Smallest k (exclusive) satisfying the global condition with k_s = k_b = 1:
/// 2 + max(2/xi, 2 xi).
double min_k(double xi);

/// Same threshold for general k_s, k_b: 2 + max(2/(k_b xi), 2 xi/k_s).
double min_k(double xi, double k_s, double k_b);

/// min_k inflated by 2 % and rounded up to two decimals.
double default_k(double xi);

/// 2/(k_b (k-2)) < xi < k_s (k-2)/2, strict on both sides.
bool check_global_condition(const GlobalK& gk, double xi);

/// Per-prosumer intervals. Sellers: b in [lo, lo + w/k), a in (w/(2 P), w/(k_s P)];
/// buyers: b in (lo + (k-1) w/k, hi], a in (w/(-2 P), w/(-k_b P)], with w the
/// price-band width and P the role's power limit. Throws DegeneratePrice on a
/// zero-width band.
ParamIntervals param_intervals_theorem2(const GlobalK& gk, const PriceInterval& price,
                                        const PowerBounds& bound, Role role);

/// Uniform draw inside `iv`. Open ends are pulled inward by a 1e-9 relative
/// margin; an unbounded upper end on `a` is capped at twice its lower end.
/// Throws EmptyInterval when either interval is empty.
CostParams sample_params(const ParamIntervals& iv, std::uint64_t seed);

/// Single uniform draw from one interval under the same endpoint rules.
double sample_bound(const Bound& iv, std::uint64_t seed);

/// Per-prosumer seed derived from a scenario seed.
std::uint64_t prosumer_seed(std::uint64_t scenario_seed, ProsumerId id) noexcept;

struct ConditionCheck {
    std::string name;
    bool passed = false;
    bool skipped = false;  // vacuous for this market shape
    double lhs = 0.0;
    double rhs = 0.0;
    std::vector<ProsumerId> failing;
};

/// Evaluation of the four sufficient conditions on a concrete parameter set:
/// b ordering, buyer curvature floors, seller curvature floors and the two-sided
/// ratio condition on sum(1/a) of buyers over sellers.
struct ConditionReport {
    double b_s_min = 0.0, b_s_max = 0.0, b_b_min = 0.0, b_b_max = 0.0;
    double ratio = 0.0;  // sum_buyers 1/a / sum_sellers 1/a
    ConditionCheck ordering;
    ConditionCheck buyer_curvature;
    ConditionCheck seller_curvature;
    ConditionCheck ratio_lower;
    ConditionCheck ratio_upper;

    bool all_passed() const noexcept;
};

ConditionReport check_theorem1(const std::vector<CostParams>& params, const std::vector<Role>& roles,
                               const PriceInterval& price, const std::vector<PowerBounds>& bounds);

/// Intervals for markets with exactly one prosumer on one side. `many` is
/// ordered like the input bounds of the larger side; the single prosumer's
/// b is fixed to `single_b` and only its `a` is drawn from `single.a`.
struct SingleSideIntervals {
    std::vector<ParamIntervals> many;
    ParamIntervals single;
    double single_b = 0.0;
};

/// One buyer, k > 1. Sellers: b in [lo, lo + w/k), a > w/(2 P_s). Buyer with
/// b_b in (lo + w/k, hi]: a in (w/(-2 P_b), (k b_b - (k-1) lo - hi)/(2 sum P_s)].
/// Throws EmptyInterval when the buyer's a-interval is empty.
SingleSideIntervals param_intervals_single_buyer(double k, const PriceInterval& price,
                                                 const std::vector<PowerBounds>& seller_bounds,
                                                 const PowerBounds& buyer_bound, double b_b);

/// One seller, k > 1. Buyers: b in (lo + w/k, hi], a > w/(-2 P_b). Seller with
/// b_s in [lo, lo + w/k): a in (w/(2 P_s), ((k-1) lo + hi - k b_s)/(-2 (k-1) sum P_b)].
SingleSideIntervals param_intervals_single_seller(double k, const PriceInterval& price,
                                                  const std::vector<PowerBounds>& buyer_bounds,
                                                  const PowerBounds& seller_bound, double b_s);

/// Moves a toward its interval's lower end: a' = a_lo + (a - a_lo) / factor.
CostParams amplify_params(const CostParams& params, const ParamIntervals& iv, double factor);

}  // namespace p2plearn
