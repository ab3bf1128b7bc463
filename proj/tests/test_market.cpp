#include <doctest.h>

#include <cmath>
#include <random>

#include "p2plearn/error.hpp"
#include "p2plearn/market.hpp"
#include "support.hpp"

using namespace p2plearn;
using testsupport::uniform;

namespace {

const std::vector<Role> kPairRoles{Role::Seller, Role::Buyer};

bool has_violation(const ClearingResult& r, ProsumerId id, ConstraintTag tag) {
    for (const auto& v : r.violations)
        if (v.id == id && v.tag == tag) return true;
    return false;
}

std::vector<CostParams> random_params(std::mt19937_64& rng, std::size_t n) {
    std::vector<CostParams> p(n);
    for (auto& c : p) c = {uniform(rng, 0.05, 5.0), uniform(rng, 5.0, 40.0)};
    return p;
}

}  // namespace

TEST_CASE("clearing price") {
    const std::vector<CostParams> same{{0.3, 21.0}, {2.0, 21.0}, {7.0, 21.0}};
    CHECK(clearing_price(same) == doctest::Approx(21.0));
    const std::vector<CostParams> pair{{1, 20}, {1, 24}};
    CHECK(clearing_price(pair) == doctest::Approx(22.0));
    const std::vector<CostParams> three{{1, 20}, {2, 21}, {1, 24}};
    CHECK(clearing_price(three) == doctest::Approx((20.0 + 10.5 + 24.0) / 2.5));
    CHECK(clearing_price(three) == doctest::Approx(21.8));
    try {
        clearing_price(std::vector<CostParams>{});
        FAIL("expected EmptyMarket");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyMarket);
    }
}

TEST_CASE("optimal trade") {
    CHECK(optimal_trade({1.0, 22.0}, 22.0) == 0.0);
    CHECK(optimal_trade({1.0, 20.0}, 22.0) == doctest::Approx(1.0));
    CHECK(optimal_trade({1.0, 24.0}, 22.0) == doctest::Approx(-1.0));
}

TEST_CASE("clear_market on the two-prosumer example") {
    const std::vector<CostParams> params{{1, 20}, {1, 24}};
    const auto ok = clear_market(params, {PowerBounds::seller(2), PowerBounds::buyer(-3)}, kPairRoles);
    CHECK(ok.lambda_star == doctest::Approx(22.0));
    CHECK(ok.trades[0] == doctest::Approx(1.0));
    CHECK(ok.trades[1] == doctest::Approx(-1.0));
    CHECK(ok.feasible);
    CHECK(ok.violations.empty());

    const auto capped = clear_market(params, {PowerBounds::seller(0.5), PowerBounds::buyer(-3)}, kPairRoles);
    CHECK_FALSE(capped.feasible);
    CHECK(has_violation(capped, 0, ConstraintTag::UpperBound));
    CHECK(capped.trades[0] == doctest::Approx(1.0));  // reported, not clipped

    const auto floored = clear_market(params, {PowerBounds::seller(2), PowerBounds::buyer(-0.5)}, kPairRoles);
    CHECK(has_violation(floored, 1, ConstraintTag::LowerBound));
}

TEST_CASE("a market with only sellers cannot clear with strict signs") {
    const std::vector<CostParams> params{{1, 20}, {1, 21}};
    const auto r = clear_market(params, {PowerBounds::seller(2), PowerBounds::seller(2)},
                                {Role::Seller, Role::Seller});
    CHECK(r.lambda_star == doctest::Approx(20.5));
    CHECK_FALSE(r.feasible);
    CHECK(has_violation(r, 1, ConstraintTag::SignViolation));
}

TEST_CASE("zero trade is unsuccessful") {
    const std::vector<CostParams> params{{1, 22}, {1, 22}};
    const auto r = clear_market(params, {PowerBounds::seller(2), PowerBounds::buyer(-3)}, kPairRoles);
    CHECK_FALSE(r.feasible);
    CHECK(r.violations.size() == 2);
}

TEST_CASE("QP oracle agrees with the closed form on an interior instance") {
    const std::vector<CostParams> params{{1, 20}, {2, 21}, {1, 24}};
    const std::vector<Role> roles{Role::Seller, Role::Seller, Role::Buyer};
    const std::vector<PowerBounds> bounds{PowerBounds::seller(10), PowerBounds::seller(10), PowerBounds::buyer(-10)};
    const auto oracle = qp_oracle(params, bounds, roles);
    CHECK(oracle.clearing.lambda_star == doctest::Approx(21.8).epsilon(1e-8));
    const auto analytic = clear_market(params, bounds, roles);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(oracle.clearing.trades[i] - analytic.trades[i]) < 1e-7);
    CHECK(oracle.kkt_residual <= 1e-8);
}

TEST_CASE("QP oracle with equal intercepts trades nothing") {
    const std::vector<CostParams> params{{1, 21}, {3, 21}, {0.5, 21}};
    const std::vector<Role> roles{Role::Seller, Role::Buyer, Role::Buyer};
    const std::vector<PowerBounds> bounds{PowerBounds::seller(2), PowerBounds::buyer(-1), PowerBounds::buyer(-1)};
    const auto r = qp_oracle(params, bounds, roles);
    for (double t : r.clearing.trades) CHECK(std::abs(t) < 1e-9);
}

TEST_CASE("QP oracle respects a binding cap where the closed form does not") {
    // Clip-and-rebalance by hand: the seller stops at 0.5 and the buyer takes -0.5.
    const std::vector<CostParams> params{{1, 20}, {1, 24}};
    const std::vector<PowerBounds> bounds{PowerBounds::seller(0.5), PowerBounds::buyer(-3)};
    const auto r = qp_oracle(params, bounds, kPairRoles);
    CHECK(r.clearing.trades[0] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(r.clearing.trades[1] == doctest::Approx(-0.5).epsilon(1e-8));
    // The buyer is interior, so the multiplier equals its marginal cost 2 a p + b.
    CHECK(r.clearing.lambda_star == doctest::Approx(23.0).epsilon(1e-8));
    const auto analytic = clear_market(params, bounds, kPairRoles);
    CHECK(std::abs(analytic.trades[0] - r.clearing.trades[0]) > 0.4);
}

TEST_CASE("QP oracle reports an exhausted budget") {
    std::mt19937_64 rng(5);
    const auto params = random_params(rng, 30);
    const auto shape = testsupport::random_shape(rng, 15, 15);
    try {
        qp_oracle(params, shape.bounds, shape.roles, {1e-30, 3});
        FAIL("expected NoConvergence");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoConvergence);
    }
}

TEST_CASE("property: balance identity over 10 000 parameter sets") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 10'000; ++trial) {
        const auto params = random_params(rng, static_cast<std::size_t>(testsupport::uniform_int(rng, 1, 60)));
        const double lambda = clearing_price(params);
        double total = 0.0;
        double scale = 0.0;
        for (const auto& p : params) {
            total += optimal_trade(p, lambda);
            scale += std::abs(optimal_trade(p, lambda));
        }
        REQUIRE(std::abs(total) <= 1e-9 * std::max(1.0, scale));
        REQUIRE(std::abs(lambda - testsupport::reference_price(params)) <= 1e-12 * lambda);
    }
}

TEST_CASE("property: raising one intercept raises the price") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 1000; ++trial) {
        auto params = random_params(rng, 8);
        const double before = clearing_price(params);
        params[static_cast<std::size_t>(trial % 8)].b += uniform(rng, 0.01, 3.0);
        REQUIRE(clearing_price(params) > before);
    }
}

TEST_CASE("property: scaling all parameters scales the price") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 1000; ++trial) {
        auto params = random_params(rng, 12);
        const double before = clearing_price(params);
        const double c = uniform(rng, 0.1, 10.0);
        for (auto& p : params) {
            p.a *= c;
            p.b *= c;
        }
        REQUIRE(clearing_price(params) == doctest::Approx(c * before).epsilon(1e-12));
    }
}

TEST_CASE("property: feasible closed form matches the oracle") {
    std::mt19937_64 rng(4);
    int feasible_seen = 0;
    for (int trial = 0; trial < 300 && feasible_seen < 40; ++trial) {
        const int sellers = testsupport::uniform_int(rng, 1, 6);
        const int buyers = testsupport::uniform_int(rng, 1, 6);
        const auto shape = testsupport::random_shape(rng, sellers, buyers);
        std::vector<CostParams> params;
        for (const auto role : shape.roles) {
            params.push_back({uniform(rng, 0.5, 4.0), role == Role::Seller ? uniform(rng, 18, 21) : uniform(rng, 22, 25)});
        }
        const auto analytic = clear_market(params, shape.bounds, shape.roles);
        if (!analytic.feasible) continue;
        ++feasible_seen;
        const auto oracle = qp_oracle(params, shape.bounds, shape.roles);
        REQUIRE(std::abs(oracle.clearing.lambda_star - analytic.lambda_star) <= 1e-6);
        for (std::size_t i = 0; i < params.size(); ++i)
            REQUIRE(std::abs(oracle.clearing.trades[i] - analytic.trades[i]) <= 1e-6);
    }
    CHECK(feasible_seen >= 10);
}

TEST_CASE("bilateral realization") {
    SUBCASE("pair") {
        const auto g = build_bipartite(kPairRoles, CompleteTopology{});
        const std::vector<double> trades{1.0, -1.0};
        const auto p = realize_bilateral(trades, g);
        CHECK(p.at({0, 1}) == doctest::Approx(1.0));
        CHECK(p.at({1, 0}) == doctest::Approx(-1.0));
    }
    SUBCASE("one seller, two equal buyers") {
        const auto g = build_bipartite({Role::Seller, Role::Buyer, Role::Buyer}, CompleteTopology{});
        const std::vector<double> trades{2.0, -1.0, -1.0};
        const auto p = realize_bilateral(trades, g);
        CHECK(p.at({0, 1}) == doctest::Approx(1.0));
        CHECK(p.at({0, 2}) == doctest::Approx(1.0));
        CHECK(p.at({2, 0}) == doctest::Approx(-1.0));
    }
    SUBCASE("unbalanced input") {
        const auto g = build_bipartite(kPairRoles, CompleteTopology{});
        const std::vector<double> trades{1.0, -0.5};
        try {
            realize_bilateral(trades, g);
            FAIL("expected Unbalanced");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::Unbalanced);
        }
    }
}

TEST_CASE("property: bilateral row sums reproduce the totals") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 200; ++trial) {
        const int sellers = testsupport::uniform_int(rng, 1, 8);
        const int buyers = testsupport::uniform_int(rng, 1, 8);
        std::vector<Role> roles(static_cast<std::size_t>(sellers), Role::Seller);
        roles.insert(roles.end(), static_cast<std::size_t>(buyers), Role::Buyer);
        const Topology topo = trial % 2 == 0 ? Topology{CompleteTopology{}}
                                             : Topology{RandomTopology{1.5, static_cast<std::uint64_t>(trial)}};
        const auto g = build_bipartite(roles, topo);
        // Role-consistent signs on even trials, arbitrary signs on odd ones.
        std::vector<double> trades(roles.size());
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < roles.size(); ++i) {
            const double mag = uniform(rng, 0.1, 2.0);
            trades[i] = trial % 2 == 0 ? (roles[i] == Role::Seller ? mag : -mag) : uniform(rng, -2.0, 2.0);
            total += trades[i];
        }
        trades.back() = -total;
        const auto p = realize_bilateral(trades, g);
        std::vector<double> rows(roles.size(), 0.0);
        for (const auto& [edge, value] : p) {
            REQUIRE(g.has_edge(edge.first, edge.second));
            REQUIRE(p.at({edge.second, edge.first}) == doctest::Approx(-value).epsilon(1e-12));
            rows[edge.first] += value;
        }
        for (std::size_t i = 0; i < roles.size(); ++i) REQUIRE(std::abs(rows[i] - trades[i]) <= 1e-8);
    }
}
