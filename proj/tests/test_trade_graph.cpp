#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "p2plearn/error.hpp"
#include "p2plearn/trade_graph.hpp"
#include "support.hpp"

using namespace p2plearn;

namespace {

std::vector<ProsumerId> ids(ProsumerId from, ProsumerId to) {
    std::vector<ProsumerId> out;
    for (ProsumerId i = from; i < to; ++i) out.push_back(i);
    return out;
}

std::vector<Role> role_split(std::size_t sellers, std::size_t buyers) {
    std::vector<Role> r(sellers, Role::Seller);
    r.insert(r.end(), buyers, Role::Buyer);
    return r;
}

// Metropolis rule evaluated straight from the degree sequence.
SquareMatrix reference_metropolis(const TradeGraph& g) {
    const std::size_t n = g.size();
    SquareMatrix w(n);
    for (const auto& [i, j] : g.edges()) {
        const double v = 1.0 / (1.0 + static_cast<double>(std::max(g.degree(i), g.degree(j))));
        w(i, j) = v;
        w(j, i) = v;
    }
    for (std::size_t i = 0; i < n; ++i) {
        double off = 0.0;
        for (std::size_t j = 0; j < n; ++j) off += i == j ? 0.0 : w(i, j);
        w(i, i) = 1.0 - off;
    }
    return w;
}

}  // namespace

TEST_CASE("smallest bipartite graph") {
    const auto g = build_bipartite(ids(0, 1), ids(1, 2), CompleteTopology{});
    REQUIRE(g.edges().size() == 1);
    CHECK(g.edges()[0] == Edge{0, 1});
    CHECK(is_connected(g));
    CHECK(g.weights() == SquareMatrix::identity(2));
}

TEST_CASE("complete K2,3 and the 55-node case") {
    const auto k23 = build_bipartite(ids(0, 2), ids(2, 5), CompleteTopology{});
    CHECK(k23.edges().size() == 6);
    CHECK(is_connected(k23));
    CHECK(k23.is_complete_bipartite());

    const auto big = build_bipartite(ids(0, 25), ids(25, 55), CompleteTopology{});
    CHECK(big.edges().size() == 25u * 30u);
}

TEST_CASE("empty side is rejected") {
    try {
        build_bipartite(ids(0, 2), {}, CompleteTopology{});
        FAIL("expected EmptySide");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptySide);
    }
    CHECK_THROWS_AS(build_bipartite({}, ids(0, 2), CompleteTopology{}), Error);
}

TEST_CASE("graph construction validates edges") {
    const auto roles = role_split(2, 2);
    CHECK_THROWS_AS(TradeGraph(roles, {{0, 1}}), Error);  // seller-seller
    CHECK_THROWS_AS(TradeGraph(roles, {{0, 0}}), Error);
    CHECK_THROWS_AS(TradeGraph(roles, {{0, 2}, {2, 0}}), Error);
    CHECK_THROWS_AS(TradeGraph(roles, {{0, 7}}), Error);
    CHECK_NOTHROW(TradeGraph(roles, {{0, 2}, {1, 3}}));
}

TEST_CASE("connectivity") {
    CHECK_FALSE(is_connected(TradeGraph(role_split(2, 2), {{0, 2}, {1, 3}})));
    CHECK(is_connected(TradeGraph({Role::Seller}, {})));
}

TEST_CASE("Metropolis weights on a path and a pair") {
    const TradeGraph path({Role::Seller, Role::Buyer, Role::Seller}, {{0, 1}, {1, 2}});
    const auto w = metropolis_weights(path).weights();
    CHECK(w(0, 1) == doctest::Approx(1.0 / 3.0));
    CHECK(w(1, 2) == doctest::Approx(1.0 / 3.0));
    CHECK(w(0, 2) == 0.0);
    CHECK(w(0, 0) == doctest::Approx(2.0 / 3.0));
    CHECK(w(1, 1) == doctest::Approx(1.0 / 3.0));
    CHECK(w(2, 2) == doctest::Approx(2.0 / 3.0));

    const auto pair = metropolis_weights(build_bipartite(ids(0, 1), ids(1, 2), CompleteTopology{})).weights();
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) CHECK(pair(i, j) == doctest::Approx(0.5));
}

TEST_CASE("Metropolis weights need a connected graph") {
    try {
        metropolis_weights(TradeGraph(role_split(2, 2), {{0, 2}, {1, 3}}));
        FAIL("expected NotConnected");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotConnected);
    }
}

TEST_CASE("random topology is deterministic and connected") {
    const RandomTopology topo{3.0, 11};
    const auto a = build_bipartite(ids(0, 10), ids(10, 25), topo);
    const auto b = build_bipartite(ids(0, 10), ids(10, 25), topo);
    CHECK(a.edges() == b.edges());
    CHECK(is_connected(a));
    const auto c = build_bipartite(ids(0, 10), ids(10, 25), RandomTopology{3.0, 12});
    CHECK(c.size() == 25);
}

TEST_CASE("property: Metropolis output is symmetric doubly stochastic (1000 random graphs)") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        const int sellers = testsupport::uniform_int(rng, 1, 50);
        const int buyers = testsupport::uniform_int(rng, 1, 100 - sellers);
        const double degree = testsupport::uniform(rng, 1.0, 6.0);
        const auto g = metropolis_weights(
            build_bipartite(role_split(sellers, buyers), RandomTopology{degree, static_cast<std::uint64_t>(trial)}));
        const auto& w = g.weights();
        const auto ref = reference_metropolis(g);
        double worst_row = 0.0;
        double worst_col = 0.0;
        bool support_ok = true;
        for (std::size_t i = 0; i < g.size(); ++i) {
            double row = 0.0;
            double col = 0.0;
            for (std::size_t j = 0; j < g.size(); ++j) {
                row += w(i, j);
                col += w(j, i);
                if (w(i, j) < 0.0 || w(i, j) > 1.0) support_ok = false;
                if (i != j && w(i, j) > 0.0 && !g.has_edge(i, j)) support_ok = false;
                if (std::abs(w(i, j) - ref(i, j)) > 1e-15) support_ok = false;
                if (w(i, j) != w(j, i)) support_ok = false;
            }
            worst_row = std::max(worst_row, std::abs(row - 1.0));
            worst_col = std::max(worst_col, std::abs(col - 1.0));
        }
        REQUIRE(support_ok);
        REQUIRE(worst_row <= 1e-12);
        REQUIRE(worst_col <= 1e-12);
        REQUIRE(doubly_stochastic_defect(w) <= 1e-12);
        for (const auto& [i, j] : g.edges()) REQUIRE(g.roles()[i] != g.roles()[j]);
    }
}

TEST_CASE("spectral contract: second eigenvalue magnitude below one (n <= 20)") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const int sellers = testsupport::uniform_int(rng, 1, 10);
        const int buyers = testsupport::uniform_int(rng, 1, 10);
        const auto g = metropolis_weights(build_bipartite(
            role_split(sellers, buyers), RandomTopology{testsupport::uniform(rng, 1.0, 4.0),
                                                        static_cast<std::uint64_t>(trial)}));
        const auto n = static_cast<Eigen::Index>(g.size());
        Eigen::MatrixXd m(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                m(i, j) = g.weights()(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
        std::vector<double> mags;
        for (Eigen::Index i = 0; i < n; ++i) mags.push_back(std::abs(solver.eigenvalues()(i)));
        std::sort(mags.rbegin(), mags.rend());
        CHECK(mags[0] == doctest::Approx(1.0).epsilon(1e-12));
        if (n > 1) REQUIRE(mags[1] < 1.0 - 1e-9);
    }
}
