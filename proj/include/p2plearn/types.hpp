#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace p2plearn {

/// Dense 0-based prosumer index; also the row/column in every weight matrix.
using ProsumerId = std::size_t;

enum class Role { Seller, Buyer };

std::string_view to_string(Role role) noexcept;

/// Quadratic cost a*p^2 + b*p. The grid implementation rate is already folded
/// into b.
struct CostParams {
    double a = 1.0;
    double b = 1.0;

    bool valid() const noexcept { return a > 0.0 && b > 0.0; }
    bool operator==(const CostParams&) const = default;
};

/// Trading limits in kW. Sellers carry a positive `p_sell_max` and a zero
/// `p_buy_min`; buyers the reverse with `p_buy_min < 0`.
struct PowerBounds {
    double p_buy_min = 0.0;
    double p_sell_max = 0.0;

    static PowerBounds seller(double p_sell_max) { return {0.0, p_sell_max}; }
    static PowerBounds buyer(double p_buy_min) { return {p_buy_min, 0.0}; }

    bool consistent_with(Role role) const noexcept;
    bool operator==(const PowerBounds&) const = default;
};

/// Preferred clearing-price band [lower, upper] in currency/kWh.
struct PriceInterval {
    double lower = 0.0;
    double upper = 0.0;

    double width() const noexcept { return upper - lower; }
    bool valid() const noexcept { return lower > 0.0 && lower <= upper; }
    bool contains_strictly(double x) const noexcept { return lower < x && x < upper; }
    bool operator==(const PriceInterval&) const = default;
};

/// Throws Error(InvalidArgument) unless the three per-prosumer vectors agree in
/// length and every bound matches its role.
void validate_market_inputs(std::size_t n_params, const std::vector<PowerBounds>& bounds,
                            const std::vector<Role>& roles);

std::size_t count_role(const std::vector<Role>& roles, Role role) noexcept;

}  // namespace p2plearn
