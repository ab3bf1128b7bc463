#include "p2plearn/market.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "p2plearn/error.hpp"

namespace p2plearn {

namespace {

constexpr double kBalanceTol = 1e-9;

struct Box {
    double lo;
    double hi;
};

std::vector<Box> trade_boxes(const std::vector<PowerBounds>& bounds, const std::vector<Role>& roles) {
    std::vector<Box> boxes(bounds.size());
    for (std::size_t i = 0; i < bounds.size(); ++i) {
        boxes[i] = roles[i] == Role::Seller ? Box{0.0, bounds[i].p_sell_max} : Box{bounds[i].p_buy_min, 0.0};
    }
    return boxes;
}

// Euclidean projection of y onto {sum p = 0} intersected with the boxes:
// p = clip(y - tau), tau found by bisection then fixed exactly on the free set.
void project_balanced(std::span<const double> y, const std::vector<Box>& boxes, std::vector<double>& p) {
    const std::size_t n = y.size();
    auto total_at = [&](double tau) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += std::clamp(y[i] - tau, boxes[i].lo, boxes[i].hi);
        return s;
    };
    double t_lo = std::numeric_limits<double>::infinity();
    double t_hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        t_lo = std::min(t_lo, y[i] - boxes[i].hi);
        t_hi = std::max(t_hi, y[i] - boxes[i].lo);
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (t_lo + t_hi);
        if (mid <= t_lo || mid >= t_hi) break;
        (total_at(mid) > 0.0 ? t_lo : t_hi) = mid;
    }
    double tau = 0.5 * (t_lo + t_hi);

    double free_sum = 0.0;
    double clipped_sum = 0.0;
    std::size_t free_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = y[i] - tau;
        if (v > boxes[i].lo && v < boxes[i].hi) {
            free_sum += y[i];
            ++free_count;
        } else {
            clipped_sum += std::clamp(v, boxes[i].lo, boxes[i].hi);
        }
    }
    if (free_count > 0) tau = (free_sum + clipped_sum) / static_cast<double>(free_count);
    p.resize(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = std::clamp(y[i] - tau, boxes[i].lo, boxes[i].hi);
}

// Balance multiplier from the KKT conditions: equals the marginal cost
// 2 a p + b of every component strictly inside its box. With no interior
// component the multiplier is any value in [max over capped, min over floored];
// the midpoint is returned.
double balance_multiplier(std::span<const CostParams> params, const std::vector<double>& p,
                          const std::vector<Box>& boxes) {
    double interior_sum = 0.0;
    std::size_t interior = 0;
    double at_upper = -std::numeric_limits<double>::infinity();
    double at_lower = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double marginal = 2.0 * params[i].a * p[i] + params[i].b;
        if (p[i] > boxes[i].lo && p[i] < boxes[i].hi) {
            interior_sum += marginal;
            ++interior;
        } else if (p[i] >= boxes[i].hi) {
            at_upper = std::max(at_upper, marginal);
        } else {
            at_lower = std::min(at_lower, marginal);
        }
    }
    if (interior > 0) return interior_sum / static_cast<double>(interior);
    if (std::isinf(at_upper)) return at_lower;
    if (std::isinf(at_lower)) return at_upper;
    return 0.5 * (at_upper + at_lower);
}

// Conjugate gradient on the graph Laplacian; rhs must sum to zero.
std::vector<double> solve_laplacian(const TradeGraph& g, std::span<const double> rhs) {
    const std::size_t n = g.size();
    auto apply = [&](const std::vector<double>& x, std::vector<double>& out) {
        out.assign(n, 0.0);
        for (auto [i, j] : g.edges()) {
            const double d = x[i] - x[j];
            out[i] += d;
            out[j] -= d;
        }
    };
    std::vector<double> x(n, 0.0);
    std::vector<double> r(rhs.begin(), rhs.end());
    const double mean = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(n);
    for (auto& v : r) v -= mean;
    std::vector<double> d = r;
    std::vector<double> q;
    double rr = std::inner_product(r.begin(), r.end(), r.begin(), 0.0);
    const double stop = 1e-30 * std::max(1.0, rr);
    for (std::size_t it = 0; it < 10 * n + 100 && rr > stop; ++it) {
        apply(d, q);
        const double dq = std::inner_product(d.begin(), d.end(), q.begin(), 0.0);
        if (dq <= 0.0) break;
        const double step = rr / dq;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += step * d[i];
            r[i] -= step * q[i];
        }
        const double rr_next = std::inner_product(r.begin(), r.end(), r.begin(), 0.0);
        for (std::size_t i = 0; i < n; ++i) d[i] = r[i] + (rr_next / rr) * d[i];
        rr = rr_next;
    }
    return x;
}

}  // namespace

std::string_view to_string(ConstraintTag tag) noexcept {
    switch (tag) {
        case ConstraintTag::SignViolation: return "SignViolation";
        case ConstraintTag::UpperBound: return "UpperBound";
        case ConstraintTag::LowerBound: return "LowerBound";
    }
    return "Unknown";
}

double ClearingResult::imbalance() const noexcept {
    return std::accumulate(trades.begin(), trades.end(), 0.0);
}

double clearing_price(std::span<const CostParams> params) {
    if (params.empty()) throw Error(ErrorCode::EmptyMarket, "clearing price of an empty market");
    double weighted = 0.0;
    double weights = 0.0;
    for (const auto& p : params) {
        if (!(p.a > 0.0)) throw Error(ErrorCode::InvalidArgument, "cost curvature a must be positive");
        weighted += p.b / p.a;
        weights += 1.0 / p.a;
    }
    return weighted / weights;
}

double optimal_trade(const CostParams& p, double lambda) noexcept {
    return (lambda - p.b) / (2.0 * p.a);
}

std::vector<Violation> check_feasibility(std::span<const double> trades,
                                         const std::vector<PowerBounds>& bounds,
                                         const std::vector<Role>& roles) {
    std::vector<Violation> out;
    for (std::size_t i = 0; i < trades.size(); ++i) {
        const double t = trades[i];
        if (roles[i] == Role::Seller) {
            if (!(t > 0.0)) out.push_back({i, ConstraintTag::SignViolation});
            if (t > bounds[i].p_sell_max) out.push_back({i, ConstraintTag::UpperBound});
        } else {
            if (!(t < 0.0)) out.push_back({i, ConstraintTag::SignViolation});
            if (t < bounds[i].p_buy_min) out.push_back({i, ConstraintTag::LowerBound});
        }
    }
    return out;
}

ClearingResult clear_market(std::span<const CostParams> params, const std::vector<PowerBounds>& bounds,
                            const std::vector<Role>& roles) {
    if (params.empty()) throw Error(ErrorCode::EmptyMarket, "cannot clear an empty market");
    validate_market_inputs(params.size(), bounds, roles);

    ClearingResult result;
    result.lambda_star = clearing_price(params);
    result.trades.reserve(params.size());
    for (const auto& p : params) result.trades.push_back(optimal_trade(p, result.lambda_star));
    result.violations = check_feasibility(result.trades, bounds, roles);
    result.feasible = result.violations.empty();
    return result;
}

OracleResult qp_oracle(std::span<const CostParams> params, const std::vector<PowerBounds>& bounds,
                       const std::vector<Role>& roles, const OracleOptions& options) {
    if (params.empty()) throw Error(ErrorCode::EmptyMarket, "cannot clear an empty market");
    validate_market_inputs(params.size(), bounds, roles);
    const std::size_t n = params.size();
    const auto boxes = trade_boxes(bounds, roles);

    double a_max = 0.0;
    for (const auto& p : params) {
        if (!(p.a > 0.0)) throw Error(ErrorCode::InvalidArgument, "cost curvature a must be positive");
        a_max = std::max(a_max, p.a);
    }
    const double step = 1.0 / (2.0 * a_max);

    std::vector<double> p(n, 0.0);
    std::vector<double> y(n);
    std::vector<double> next;
    OracleResult out;
    for (int it = 1; it <= options.max_iterations; ++it) {
        for (std::size_t i = 0; i < n; ++i) y[i] = p[i] - step * (2.0 * params[i].a * p[i] + params[i].b);
        project_balanced(y, boxes, next);
        double residual = 0.0;
        for (std::size_t i = 0; i < n; ++i) residual = std::max(residual, std::abs(next[i] - p[i]));
        residual /= step;
        p.swap(next);
        out.iterations = it;
        out.kkt_residual = residual;
        if (residual <= options.tol) break;
    }
    if (out.kkt_residual > options.tol) {
        throw Error(ErrorCode::NoConvergence, "qp oracle: residual " + std::to_string(out.kkt_residual) +
                                                  " after " + std::to_string(out.iterations) + " iterations");
    }

    out.clearing.lambda_star = balance_multiplier(params, p, boxes);
    out.clearing.trades = std::move(p);
    out.clearing.violations = check_feasibility(out.clearing.trades, bounds, roles);
    out.clearing.feasible = out.clearing.violations.empty();
    return out;
}

BilateralTrades realize_bilateral(std::span<const double> trades, const TradeGraph& g) {
    if (trades.size() != g.size()) throw Error(ErrorCode::InvalidArgument, "trade vector does not match graph");
    const double total = std::accumulate(trades.begin(), trades.end(), 0.0);
    if (std::abs(total) > kBalanceTol) {
        throw Error(ErrorCode::Unbalanced, "trades sum to " + std::to_string(total) + ", not zero");
    }
    if (!is_connected(g)) throw Error(ErrorCode::NotConnected, "bilateral realization needs a connected graph");

    const auto& roles = g.roles();
    bool sign_consistent = true;
    double demand = 0.0;
    for (std::size_t i = 0; i < trades.size(); ++i) {
        if (roles[i] == Role::Seller) {
            sign_consistent = sign_consistent && trades[i] >= 0.0;
        } else {
            sign_consistent = sign_consistent && trades[i] <= 0.0;
            demand += std::abs(trades[i]);
        }
    }

    BilateralTrades out;
    if (g.is_complete_bipartite() && sign_consistent) {
        for (auto [i, j] : g.edges()) {
            const ProsumerId s = roles[i] == Role::Seller ? i : j;
            const ProsumerId b = s == i ? j : i;
            const double flow = demand > 0.0 ? trades[s] * std::abs(trades[b]) / demand : 0.0;
            out[{s, b}] = flow;
            out[{b, s}] = -flow;
        }
        return out;
    }

    const auto potential = solve_laplacian(g, trades);
    for (auto [i, j] : g.edges()) {
        const double flow = potential[i] - potential[j];
        out[{i, j}] = flow;
        out[{j, i}] = -flow;
    }
    return out;
}

}  // namespace p2plearn
