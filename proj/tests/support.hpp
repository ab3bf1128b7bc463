#pragma once

// Shared helpers for the unit and acceptance tests: random market shapes and
// small reference computations written independently of the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "p2plearn/types.hpp"

namespace testsupport {

using p2plearn::CostParams;
using p2plearn::PowerBounds;
using p2plearn::Role;

struct Shape {
    std::vector<Role> roles;
    std::vector<PowerBounds> bounds;
};

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

/// Sellers first, then buyers, with limits in [0.5, 5] kW.
inline Shape random_shape(std::mt19937_64& rng, int sellers, int buyers) {
    Shape s;
    for (int i = 0; i < sellers; ++i) {
        s.roles.push_back(Role::Seller);
        s.bounds.push_back(PowerBounds::seller(uniform(rng, 0.5, 5.0)));
    }
    for (int i = 0; i < buyers; ++i) {
        s.roles.push_back(Role::Buyer);
        s.bounds.push_back(PowerBounds::buyer(-uniform(rng, 0.5, 5.0)));
    }
    return s;
}

/// Reference price: sum(b/a) / sum(1/a).
inline double reference_price(const std::vector<CostParams>& params) {
    double num = 0.0;
    double den = 0.0;
    for (const auto& p : params) {
        num += p.b / p.a;
        den += 1.0 / p.a;
    }
    return num / den;
}

/// Strict feasibility written out longhand.
inline bool strictly_feasible(const std::vector<double>& trades, const Shape& shape) {
    for (std::size_t i = 0; i < trades.size(); ++i) {
        const double t = trades[i];
        if (shape.roles[i] == Role::Seller) {
            if (!(t > 0.0 && t <= shape.bounds[i].p_sell_max)) return false;
        } else {
            if (!(t < 0.0 && t >= shape.bounds[i].p_buy_min)) return false;
        }
    }
    return true;
}

inline double sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

/// The four sufficient conditions on intercepts and curvatures, evaluated
/// directly. The ratio condition's left side is dropped with a single seller
/// and its right side with a single buyer.
inline bool reference_conditions(const std::vector<CostParams>& params, const Shape& shape, double lo, double hi) {
    double bs_min = INFINITY, bs_max = -INFINITY, bb_min = INFINITY, bb_max = -INFINITY;
    double inv_s = 0.0, inv_b = 0.0;
    std::size_t sellers = 0, buyers = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (shape.roles[i] == Role::Seller) {
            bs_min = std::min(bs_min, params[i].b);
            bs_max = std::max(bs_max, params[i].b);
            inv_s += 1.0 / params[i].a;
            ++sellers;
        } else {
            bb_min = std::min(bb_min, params[i].b);
            bb_max = std::max(bb_max, params[i].b);
            inv_b += 1.0 / params[i].a;
            ++buyers;
        }
    }
    if (!(lo <= bs_min && bs_min <= bs_max && bs_max < bb_min && bb_min <= bb_max && bb_max <= hi)) return false;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (shape.roles[i] == Role::Seller) {
            if (!(params[i].a > (bb_min - bs_min) / (2.0 * shape.bounds[i].p_sell_max))) return false;
        } else {
            if (!(params[i].a > (bb_max - bs_max) / (-2.0 * shape.bounds[i].p_buy_min))) return false;
        }
    }
    const double ratio = inv_b / inv_s;
    if (sellers > 1 && !((bs_max - bs_min) / (bb_min - bs_max) < ratio)) return false;
    if (buyers > 1 && !(ratio < (bb_min - bs_max) / (bb_max - bb_min))) return false;
    return true;
}

}  // namespace testsupport
