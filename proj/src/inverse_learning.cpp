#include "p2plearn/inverse_learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "p2plearn/error.hpp"

namespace p2plearn {

namespace {

constexpr double kOpenMargin = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double require_width(const PriceInterval& price) {
    if (!price.valid()) throw Error(ErrorCode::InvalidArgument, "price interval must satisfy 0 < lower <= upper");
    const double w = price.width();
    if (!(w > 0.0)) throw Error(ErrorCode::DegeneratePrice, "price interval has zero width");
    return w;
}

double draw(const Bound& iv, std::mt19937_64& rng) {
    if (iv.empty()) throw Error(ErrorCode::EmptyInterval, "cannot sample from an empty interval");
    double lo = iv.lo;
    double hi = std::isinf(iv.hi) ? 2.0 * iv.lo : iv.hi;
    const double width = hi - lo;
    if (iv.lo_open) lo += kOpenMargin * std::max(std::abs(lo), width);
    if (iv.hi_open && !std::isinf(iv.hi)) hi -= kOpenMargin * std::max(std::abs(hi), width);
    if (!(lo < hi)) return 0.5 * (iv.lo + (std::isinf(iv.hi) ? 2.0 * iv.lo : iv.hi));
    std::uniform_real_distribution<double> dist(lo, hi);
    return dist(rng);
}

void require_role_bound(const PowerBounds& bound, Role role) {
    if (!bound.consistent_with(role)) {
        throw Error(ErrorCode::InvalidArgument, std::string("power bound is not a valid ") +
                                                    std::string(to_string(role)) + " bound");
    }
}

}  // namespace

bool GlobalK::valid() const noexcept {
    return k > 3.0 && k_s > 0.0 && k_s < 2.0 && k_b > 0.0 && k_b < 2.0;
}

bool Bound::contains(double x) const noexcept {
    const bool above = lo_open ? x > lo : x >= lo;
    const bool below = hi_open ? x < hi : x <= hi;
    return above && below;
}

bool Bound::empty() const noexcept {
    if (lo_open || hi_open) return !(lo < hi);
    return !(lo <= hi);
}

double demand_supply_ratio(const std::vector<PowerBounds>& bounds, const std::vector<Role>& roles) {
    validate_market_inputs(bounds.size(), bounds, roles);
    double demand = 0.0;
    double supply = 0.0;
    for (std::size_t i = 0; i < bounds.size(); ++i) {
        if (roles[i] == Role::Seller) {
            supply += bounds[i].p_sell_max;
        } else {
            demand -= bounds[i].p_buy_min;
        }
    }
    if (count_role(roles, Role::Seller) == 0 || count_role(roles, Role::Buyer) == 0 || !(supply > 0.0)) {
        throw Error(ErrorCode::MissingSide, "demand/supply ratio needs at least one seller and one buyer");
    }
    return demand / supply;
}

double min_k(double xi) {
    if (!(xi > 0.0)) throw Error(ErrorCode::InvalidArgument, "xi must be positive");
    return 2.0 + std::max(2.0 / xi, 2.0 * xi);
}

double min_k(double xi, double k_s, double k_b) {
    if (!(xi > 0.0)) throw Error(ErrorCode::InvalidArgument, "xi must be positive");
    if (!(k_s > 0.0 && k_b > 0.0)) throw Error(ErrorCode::InvalidArgument, "k_s and k_b must be positive");
    return 2.0 + std::max(2.0 / (k_b * xi), 2.0 * xi / k_s);
}

double default_k(double xi) {
    return std::ceil(min_k(xi) * 1.02 * 100.0) / 100.0;
}

bool check_global_condition(const GlobalK& gk, double xi) {
    return 2.0 / (gk.k_b * (gk.k - 2.0)) < xi && xi < gk.k_s * (gk.k - 2.0) / 2.0;
}

ParamIntervals param_intervals_theorem2(const GlobalK& gk, const PriceInterval& price,
                                        const PowerBounds& bound, Role role) {
    if (!gk.valid()) throw Error(ErrorCode::InvalidArgument, "GlobalK requires k > 3 and 0 < k_s, k_b < 2");
    const double w = require_width(price);
    require_role_bound(bound, role);
    ParamIntervals iv;
    if (role == Role::Seller) {
        iv.b = {price.lower, price.lower + w / gk.k, false, true};
        iv.a = {w / (2.0 * bound.p_sell_max), w / (gk.k_s * bound.p_sell_max), true, false};
    } else {
        iv.b = {price.lower + (gk.k - 1.0) * w / gk.k, price.upper, true, false};
        iv.a = {w / (-2.0 * bound.p_buy_min), w / (-gk.k_b * bound.p_buy_min), true, false};
    }
    return iv;
}

CostParams sample_params(const ParamIntervals& iv, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    CostParams p;
    p.b = draw(iv.b, rng);
    p.a = draw(iv.a, rng);
    return p;
}

double sample_bound(const Bound& iv, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return draw(iv, rng);
}

std::uint64_t prosumer_seed(std::uint64_t scenario_seed, ProsumerId id) noexcept {
    return splitmix64(splitmix64(scenario_seed) ^ splitmix64(0x5eed0000ULL + id));
}

bool ConditionReport::all_passed() const noexcept {
    auto ok = [](const ConditionCheck& c) { return c.skipped || c.passed; };
    return ok(ordering) && ok(buyer_curvature) && ok(seller_curvature) && ok(ratio_lower) && ok(ratio_upper);
}

ConditionReport check_theorem1(const std::vector<CostParams>& params, const std::vector<Role>& roles,
                               const PriceInterval& price, const std::vector<PowerBounds>& bounds) {
    validate_market_inputs(params.size(), bounds, roles);
    const std::size_t n_s = count_role(roles, Role::Seller);
    const std::size_t n_b = count_role(roles, Role::Buyer);
    if (n_s == 0 || n_b == 0) throw Error(ErrorCode::MissingSide, "condition check needs both sides");

    ConditionReport r;
    r.b_s_min = r.b_b_min = kInf;
    r.b_s_max = r.b_b_max = -kInf;
    double inv_a_s = 0.0;
    double inv_a_b = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (roles[i] == Role::Seller) {
            r.b_s_min = std::min(r.b_s_min, params[i].b);
            r.b_s_max = std::max(r.b_s_max, params[i].b);
            inv_a_s += 1.0 / params[i].a;
        } else {
            r.b_b_min = std::min(r.b_b_min, params[i].b);
            r.b_b_max = std::max(r.b_b_max, params[i].b);
            inv_a_b += 1.0 / params[i].a;
        }
    }
    r.ratio = inv_a_b / inv_a_s;

    r.ordering.name = "b-ordering";
    r.ordering.lhs = r.b_s_max;
    r.ordering.rhs = r.b_b_min;
    r.ordering.passed = price.lower <= r.b_s_min && r.b_s_min <= r.b_s_max && r.b_s_max < r.b_b_min &&
                        r.b_b_min <= r.b_b_max && r.b_b_max <= price.upper;

    r.buyer_curvature.name = "buyer-curvature";
    r.seller_curvature.name = "seller-curvature";
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (roles[i] == Role::Buyer) {
            const double floor = (r.b_b_max - r.b_s_max) / (-2.0 * bounds[i].p_buy_min);
            r.buyer_curvature.rhs = std::max(r.buyer_curvature.rhs, floor);
            if (!(params[i].a > floor)) r.buyer_curvature.failing.push_back(i);
        } else {
            const double floor = (r.b_b_min - r.b_s_min) / (2.0 * bounds[i].p_sell_max);
            r.seller_curvature.rhs = std::max(r.seller_curvature.rhs, floor);
            if (!(params[i].a > floor)) r.seller_curvature.failing.push_back(i);
        }
    }
    r.buyer_curvature.passed = r.buyer_curvature.failing.empty();
    r.seller_curvature.passed = r.seller_curvature.failing.empty();

    const double gap = r.b_b_min - r.b_s_max;

    r.ratio_lower.name = "ratio-lower";
    r.ratio_lower.rhs = r.ratio;
    if (n_s == 1) {
        r.ratio_lower.skipped = true;
    } else {
        r.ratio_lower.lhs = gap > 0.0 ? (r.b_s_max - r.b_s_min) / gap : kInf;
        r.ratio_lower.passed = r.ratio_lower.lhs < r.ratio;
    }

    r.ratio_upper.name = "ratio-upper";
    r.ratio_upper.lhs = r.ratio;
    if (n_b == 1) {
        r.ratio_upper.skipped = true;
    } else {
        const double spread = r.b_b_max - r.b_b_min;
        r.ratio_upper.rhs = gap <= 0.0 ? -kInf : (spread > 0.0 ? gap / spread : kInf);
        r.ratio_upper.passed = r.ratio < r.ratio_upper.rhs;
    }
    return r;
}

SingleSideIntervals param_intervals_single_buyer(double k, const PriceInterval& price,
                                                 const std::vector<PowerBounds>& seller_bounds,
                                                 const PowerBounds& buyer_bound, double b_b) {
    if (!(k > 1.0)) throw Error(ErrorCode::InvalidArgument, "single-buyer intervals need k > 1");
    const double w = require_width(price);
    require_role_bound(buyer_bound, Role::Buyer);
    if (seller_bounds.empty()) throw Error(ErrorCode::MissingSide, "single-buyer market without sellers");
    const double split = price.lower + w / k;
    if (!(b_b > split && b_b <= price.upper)) {
        throw Error(ErrorCode::InvalidArgument, "buyer intercept outside (lower + width/k, upper]");
    }

    SingleSideIntervals out;
    double supply = 0.0;
    for (const auto& sb : seller_bounds) {
        require_role_bound(sb, Role::Seller);
        supply += sb.p_sell_max;
        out.many.push_back({{price.lower, split, false, true}, {w / (2.0 * sb.p_sell_max), kInf, true, true}});
    }
    out.single.b = {split, price.upper, true, false};
    out.single.a = {w / (-2.0 * buyer_bound.p_buy_min),
                    (k * b_b - (k - 1.0) * price.lower - price.upper) / (2.0 * supply), true, false};
    out.single_b = b_b;
    if (out.single.a.empty()) throw Error(ErrorCode::EmptyInterval, "buyer curvature interval is empty");
    return out;
}

SingleSideIntervals param_intervals_single_seller(double k, const PriceInterval& price,
                                                  const std::vector<PowerBounds>& buyer_bounds,
                                                  const PowerBounds& seller_bound, double b_s) {
    if (!(k > 1.0)) throw Error(ErrorCode::InvalidArgument, "single-seller intervals need k > 1");
    const double w = require_width(price);
    require_role_bound(seller_bound, Role::Seller);
    if (buyer_bounds.empty()) throw Error(ErrorCode::MissingSide, "single-seller market without buyers");
    const double split = price.lower + w / k;
    if (!(b_s >= price.lower && b_s < split)) {
        throw Error(ErrorCode::InvalidArgument, "seller intercept outside [lower, lower + width/k)");
    }

    SingleSideIntervals out;
    double demand = 0.0;
    for (const auto& bb : buyer_bounds) {
        require_role_bound(bb, Role::Buyer);
        demand -= bb.p_buy_min;
        out.many.push_back({{split, price.upper, true, false}, {w / (-2.0 * bb.p_buy_min), kInf, true, true}});
    }
    out.single.b = {price.lower, split, false, true};
    out.single.a = {w / (2.0 * seller_bound.p_sell_max),
                    ((k - 1.0) * price.lower + price.upper - k * b_s) / (2.0 * (k - 1.0) * demand), true, false};
    out.single_b = b_s;
    if (out.single.a.empty()) throw Error(ErrorCode::EmptyInterval, "seller curvature interval is empty");
    return out;
}

CostParams amplify_params(const CostParams& params, const ParamIntervals& iv, double factor) {
    if (!(factor >= 1.0)) throw Error(ErrorCode::InvalidArgument, "amplification factor must be >= 1");
    if (!iv.a.contains(params.a)) throw Error(ErrorCode::InvalidArgument, "curvature a is outside its interval");
    return {iv.a.lo + (params.a - iv.a.lo) / factor, params.b};
}

}  // namespace p2plearn
