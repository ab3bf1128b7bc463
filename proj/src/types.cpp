#include "p2plearn/types.hpp"

#include <algorithm>
#include <string>

#include "p2plearn/error.hpp"

namespace p2plearn {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::EmptySide: return "EmptySide";
        case ErrorCode::Disconnected: return "Disconnected";
        case ErrorCode::NotConnected: return "NotConnected";
        case ErrorCode::EmptyMarket: return "EmptyMarket";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::Unbalanced: return "Unbalanced";
        case ErrorCode::MissingSide: return "MissingSide";
        case ErrorCode::DegeneratePrice: return "DegeneratePrice";
        case ErrorCode::EmptyInterval: return "EmptyInterval";
        case ErrorCode::GlobalConditionViolated: return "GlobalConditionViolated";
        case ErrorCode::NonOverlapping: return "NonOverlapping";
        case ErrorCode::InvalidLocalK: return "InvalidLocalK";
        case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::SchemaError: return "SchemaError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

std::string_view to_string(Role role) noexcept {
    return role == Role::Seller ? "seller" : "buyer";
}

bool PowerBounds::consistent_with(Role role) const noexcept {
    if (role == Role::Seller) return p_buy_min == 0.0 && p_sell_max > 0.0;
    return p_sell_max == 0.0 && p_buy_min < 0.0;
}

void validate_market_inputs(std::size_t n_params, const std::vector<PowerBounds>& bounds,
                            const std::vector<Role>& roles) {
    if (bounds.size() != n_params || roles.size() != n_params) {
        throw Error(ErrorCode::InvalidArgument, "params, bounds and roles differ in length");
    }
    for (std::size_t i = 0; i < n_params; ++i) {
        if (!bounds[i].consistent_with(roles[i])) {
            throw Error(ErrorCode::InvalidArgument,
                        "prosumer " + std::to_string(i) + ": bounds inconsistent with role " +
                            std::string(to_string(roles[i])));
        }
    }
}

std::size_t count_role(const std::vector<Role>& roles, Role role) noexcept {
    return static_cast<std::size_t>(std::count(roles.begin(), roles.end(), role));
}

}  // namespace p2plearn
