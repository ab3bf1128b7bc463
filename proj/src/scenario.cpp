#include "p2plearn/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "p2plearn/error.hpp"

namespace p2plearn {

namespace {

constexpr std::size_t kSolarNodes = 25;
constexpr std::size_t kBatteryNodes = 30;
constexpr double kSolarCapKw = 2.0;
constexpr double kBatteryFloorKw = -3.0;
constexpr double kIdleSolarFloorKw = -1.5;
constexpr PriceInterval kSellerBand{20.0, 23.8};
constexpr PriceInterval kBuyerBand{19.0, 23.0};
constexpr double kLowerShare = 0.6;
constexpr int kGenerateRetries = 100;

// Lower end uniform over the bottom 60 % of [band.lower, anchor], upper end
// uniform over [anchor, band.upper].
PriceInterval draw_band(const PriceInterval& band, double anchor, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> lower(band.lower, band.lower + kLowerShare * (anchor - band.lower));
    std::uniform_real_distribution<double> upper(anchor, band.upper);
    const double lo = lower(rng);
    return {lo, upper(rng)};
}

double band_anchor() {
    const double lo = std::max(kSellerBand.lower, kBuyerBand.lower);
    const double hi = std::min(kSellerBand.upper, kBuyerBand.upper);
    return 0.5 * (lo + hi);
}

double solar_shape(int hour) {
    if (hour <= 6 || hour >= 18) return 0.0;
    return std::sin(std::numbers::pi * (hour - 6) / 12.0);
}

}  // namespace

PowerBounds ProsumerSpec::bounds() const noexcept {
    return role == Role::Seller ? PowerBounds::seller(bound_kw) : PowerBounds::buyer(bound_kw);
}

std::vector<Role> MarketScenario::roles() const {
    std::vector<Role> out;
    out.reserve(prosumers.size());
    for (const auto& p : prosumers) out.push_back(p.role);
    return out;
}

std::vector<PowerBounds> MarketScenario::bounds() const {
    std::vector<PowerBounds> out;
    out.reserve(prosumers.size());
    for (const auto& p : prosumers) out.push_back(p.bounds());
    return out;
}

std::vector<PriceInterval> MarketScenario::price_intervals() const {
    std::vector<PriceInterval> out;
    out.reserve(prosumers.size());
    for (const auto& p : prosumers) out.push_back(p.price);
    return out;
}

bool MarketScenario::has_both_sides() const noexcept {
    const auto r = roles();
    return count_role(r, Role::Seller) > 0 && count_role(r, Role::Buyer) > 0;
}

void MarketScenario::validate() const {
    if (prosumers.empty()) throw Error(ErrorCode::SchemaError, "scenario has no prosumers");
    for (std::size_t i = 0; i < prosumers.size(); ++i) {
        const auto& p = prosumers[i];
        const std::string who = "prosumer " + std::to_string(p.id);
        if (p.id != i) {
            throw Error(ErrorCode::SchemaError, who + ": ids must be dense and ordered, expected " + std::to_string(i));
        }
        if (!std::isfinite(p.bound_kw) || !p.bounds().consistent_with(p.role)) {
            throw Error(ErrorCode::SchemaError,
                        who + ": bound_kw must be > 0 for a seller and < 0 for a buyer");
        }
        if (!std::isfinite(p.price.lower) || !std::isfinite(p.price.upper) || !p.price.valid()) {
            throw Error(ErrorCode::SchemaError, who + ": price band must satisfy 0 < price_lo <= price_hi");
        }
    }
    if (const auto* random = std::get_if<RandomTopology>(&topology); random != nullptr && !(random->degree > 0.0)) {
        throw Error(ErrorCode::SchemaError, "random topology needs a positive degree");
    }
}

bool find_non_overlapping(const std::vector<PriceInterval>& bands, std::size_t& i, std::size_t& j) {
    for (i = 0; i < bands.size(); ++i) {
        for (j = i + 1; j < bands.size(); ++j) {
            if (std::max(bands[i].lower, bands[j].lower) > std::min(bands[i].upper, bands[j].upper)) return true;
        }
    }
    return false;
}

MarketScenario generate_case_study(std::uint64_t seed) {
    const double anchor = band_anchor();
    for (int attempt = 0; attempt < kGenerateRetries; ++attempt) {
        std::mt19937_64 rng(seed + static_cast<std::uint64_t>(attempt));
        MarketScenario s;
        s.meta.label = "case-study-seed-" + std::to_string(seed);
        for (std::size_t i = 0; i < kSolarNodes; ++i) {
            s.prosumers.push_back({i, Role::Seller, kSolarCapKw, draw_band(kSellerBand, anchor, rng)});
        }
        for (std::size_t i = 0; i < kBatteryNodes; ++i) {
            s.prosumers.push_back({kSolarNodes + i, Role::Buyer, kBatteryFloorKw, draw_band(kBuyerBand, anchor, rng)});
        }
        std::size_t a = 0;
        std::size_t b = 0;
        if (!find_non_overlapping(s.price_intervals(), a, b)) return s;
    }
    throw Error(ErrorCode::InvalidArgument, "could not generate overlapping price bands");
}

std::vector<MarketScenario> generate_day_series(std::uint64_t seed) {
    const double anchor = band_anchor();
    std::vector<MarketScenario> day;
    for (int hour = 0; hour < 24; ++hour) {
        std::mt19937_64 rng(seed * 24 + static_cast<std::uint64_t>(hour));
        MarketScenario s;
        s.meta.label = "day-seed-" + std::to_string(seed) + "-hour-" + std::to_string(hour);
        const double cap = std::round(1000.0 * kSolarCapKw * solar_shape(hour)) / 1000.0;
        for (std::size_t i = 0; i < kSolarNodes; ++i) {
            if (cap >= 0.2) {
                s.prosumers.push_back({i, Role::Seller, cap, draw_band(kSellerBand, anchor, rng)});
            } else {
                s.prosumers.push_back({i, Role::Buyer, kIdleSolarFloorKw, draw_band(kBuyerBand, anchor, rng)});
            }
        }
        for (std::size_t i = 0; i < kBatteryNodes; ++i) {
            s.prosumers.push_back({kSolarNodes + i, Role::Buyer, kBatteryFloorKw, draw_band(kBuyerBand, anchor, rng)});
        }
        day.push_back(std::move(s));
    }
    return day;
}

}  // namespace p2plearn
