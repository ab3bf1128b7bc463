#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "p2plearn/trade_graph.hpp"
#include "p2plearn/types.hpp"

namespace p2plearn {

inline constexpr int kFormatVersion = 1;

struct ProsumerSpec {
    ProsumerId id = 0;
    Role role = Role::Seller;
    double bound_kw = 0.0;  // p_sell_max (> 0) for sellers, p_buy_min (< 0) for buyers
    PriceInterval price;

    PowerBounds bounds() const noexcept;
    bool operator==(const ProsumerSpec&) const = default;
};

struct ScenarioMeta {
    std::string label;
    std::string currency = "JPY/kWh";
    bool operator==(const ScenarioMeta&) const = default;
};

/// One trading time step: who sells, who buys, their limits and price bands,
/// and how they are wired.
struct MarketScenario {
    ScenarioMeta meta;
    std::vector<ProsumerSpec> prosumers;
    Topology topology = CompleteTopology{};

    std::size_t size() const noexcept { return prosumers.size(); }
    std::vector<Role> roles() const;
    std::vector<PowerBounds> bounds() const;
    std::vector<PriceInterval> price_intervals() const;
    bool has_both_sides() const noexcept;

    /// Throws SchemaError on the first broken invariant: empty market, ids not
    /// dense 0..n-1 in order, bound sign inconsistent with role, bad price band.
    void validate() const;

    bool operator==(const MarketScenario&) const = default;
};

/// 25 sellers capped at 2 kW with bands inside [20, 23.8] and 30 buyers floored
/// at -3 kW with bands inside [19, 23], complete bipartite wiring. Every band
/// contains the midpoint of the two ranges' overlap, so all bands pairwise
/// overlap.
MarketScenario generate_case_study(std::uint64_t seed);

/// 24 hourly scenarios for the same 55 nodes. The 25 solar nodes sell a
/// fraction of 2 kW that follows a synthetic clear-sky curve and turn into
/// 1.5 kW buyers when the sun is down; the 30 battery nodes always buy up to
/// 3 kW. Night hours therefore have no sellers.
std::vector<MarketScenario> generate_day_series(std::uint64_t seed);

/// First pair (i, j), i < j, whose price bands are disjoint, if any.
bool find_non_overlapping(const std::vector<PriceInterval>& bands, std::size_t& i, std::size_t& j);

}  // namespace p2plearn
