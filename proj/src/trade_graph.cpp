#include "p2plearn/trade_graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <set>
#include <string>

#include "p2plearn/error.hpp"

namespace p2plearn {

namespace {

constexpr int kTopologyRetries = 100;

Edge ordered(ProsumerId i, ProsumerId j) { return i < j ? Edge{i, j} : Edge{j, i}; }

std::vector<Edge> random_bipartite_edges(const std::vector<ProsumerId>& sellers,
                                         const std::vector<ProsumerId>& buyers, double degree,
                                         std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::set<Edge> edges;

    std::vector<ProsumerId> s = sellers;
    std::vector<ProsumerId> b = buyers;
    std::shuffle(s.begin(), s.end(), rng);
    std::shuffle(b.begin(), b.end(), rng);

    // Spanning tree: every new node hangs off an already placed node of the
    // opposite class.
    edges.insert(ordered(s[0], b[0]));
    std::vector<ProsumerId> placed_s{s[0]};
    std::vector<ProsumerId> placed_b{b[0]};
    std::vector<std::pair<ProsumerId, Role>> rest;
    for (std::size_t i = 1; i < s.size(); ++i) rest.emplace_back(s[i], Role::Seller);
    for (std::size_t i = 1; i < b.size(); ++i) rest.emplace_back(b[i], Role::Buyer);
    std::shuffle(rest.begin(), rest.end(), rng);
    for (const auto& [id, role] : rest) {
        auto& other = role == Role::Seller ? placed_b : placed_s;
        std::uniform_int_distribution<std::size_t> pick(0, other.size() - 1);
        edges.insert(ordered(id, other[pick(rng)]));
        (role == Role::Seller ? placed_s : placed_b).push_back(id);
    }

    const std::size_t n = sellers.size() + buyers.size();
    const std::size_t max_edges = sellers.size() * buyers.size();
    const auto target = static_cast<std::size_t>(std::ceil(degree * static_cast<double>(n) / 2.0));
    std::uniform_int_distribution<std::size_t> pick_s(0, sellers.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_b(0, buyers.size() - 1);
    while (edges.size() < std::min(target, max_edges)) {
        edges.insert(ordered(sellers[pick_s(rng)], buyers[pick_b(rng)]));
    }
    return {edges.begin(), edges.end()};
}

}  // namespace

SquareMatrix SquareMatrix::identity(std::size_t n) {
    SquareMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

TradeGraph::TradeGraph(std::vector<Role> roles, std::vector<Edge> edges)
    : roles_(std::move(roles)), adjacency_(roles_.size()), weights_(SquareMatrix::identity(roles_.size())) {
    const std::size_t n = roles_.size();
    std::set<Edge> seen;
    for (auto [i, j] : edges) {
        if (i >= n || j >= n) {
            throw Error(ErrorCode::InvalidArgument,
                        "edge (" + std::to_string(i) + "," + std::to_string(j) + ") out of range");
        }
        if (i == j) throw Error(ErrorCode::InvalidArgument, "self-loop on node " + std::to_string(i));
        if (roles_[i] == roles_[j]) {
            throw Error(ErrorCode::InvalidArgument, "edge (" + std::to_string(i) + "," +
                                                        std::to_string(j) +
                                                        ") joins two prosumers of the same role");
        }
        if (!seen.insert(ordered(i, j)).second) {
            throw Error(ErrorCode::InvalidArgument,
                        "duplicate edge (" + std::to_string(i) + "," + std::to_string(j) + ")");
        }
    }
    edges_.assign(seen.begin(), seen.end());
    for (auto [i, j] : edges_) {
        adjacency_[i].push_back(j);
        adjacency_[j].push_back(i);
    }
    for (auto& adj : adjacency_) std::sort(adj.begin(), adj.end());
}

bool TradeGraph::has_edge(ProsumerId i, ProsumerId j) const {
    const auto& adj = adjacency_.at(i);
    return std::binary_search(adj.begin(), adj.end(), j);
}

bool TradeGraph::is_complete_bipartite() const {
    return edges_.size() == count_role(roles_, Role::Seller) * count_role(roles_, Role::Buyer);
}

TradeGraph TradeGraph::with_weights(SquareMatrix weights) const {
    if (weights.size() != size()) {
        throw Error(ErrorCode::InvalidArgument, "weight matrix size does not match graph");
    }
    TradeGraph g = *this;
    g.weights_ = std::move(weights);
    return g;
}

TradeGraph build_bipartite(const std::vector<ProsumerId>& sellers,
                           const std::vector<ProsumerId>& buyers, const Topology& topology) {
    if (sellers.empty() || buyers.empty()) {
        throw Error(ErrorCode::EmptySide, "bipartite graph needs at least one seller and one buyer");
    }
    const std::size_t n = sellers.size() + buyers.size();
    std::vector<Role> roles(n, Role::Seller);
    std::vector<bool> assigned(n, false);
    auto assign = [&](ProsumerId id, Role role) {
        if (id >= n || assigned[id]) {
            throw Error(ErrorCode::InvalidArgument,
                        "prosumer ids must be distinct and dense in 0.." + std::to_string(n - 1));
        }
        assigned[id] = true;
        roles[id] = role;
    };
    for (auto id : sellers) assign(id, Role::Seller);
    for (auto id : buyers) assign(id, Role::Buyer);

    if (std::holds_alternative<CompleteTopology>(topology)) {
        std::vector<Edge> edges;
        edges.reserve(sellers.size() * buyers.size());
        for (auto s : sellers)
            for (auto b : buyers) edges.push_back(ordered(s, b));
        return TradeGraph(std::move(roles), std::move(edges));
    }

    const auto& random = std::get<RandomTopology>(topology);
    for (int attempt = 0; attempt < kTopologyRetries; ++attempt) {
        TradeGraph g(roles, random_bipartite_edges(sellers, buyers, random.degree,
                                                   random.seed + static_cast<std::uint64_t>(attempt)));
        if (is_connected(g)) return g;
    }
    throw Error(ErrorCode::Disconnected, "random topology failed to connect after " +
                                             std::to_string(kTopologyRetries) + " attempts");
}

TradeGraph build_bipartite(const std::vector<Role>& roles, const Topology& topology) {
    std::vector<ProsumerId> sellers;
    std::vector<ProsumerId> buyers;
    for (ProsumerId i = 0; i < roles.size(); ++i) {
        (roles[i] == Role::Seller ? sellers : buyers).push_back(i);
    }
    return build_bipartite(sellers, buyers, topology);
}

bool is_connected(const TradeGraph& g) {
    const std::size_t n = g.size();
    if (n == 0) return false;
    std::vector<bool> visited(n, false);
    std::queue<ProsumerId> frontier;
    frontier.push(0);
    visited[0] = true;
    std::size_t reached = 1;
    while (!frontier.empty()) {
        const ProsumerId i = frontier.front();
        frontier.pop();
        for (ProsumerId j : g.neighbors(i)) {
            if (!visited[j]) {
                visited[j] = true;
                ++reached;
                frontier.push(j);
            }
        }
    }
    return reached == n;
}

TradeGraph metropolis_weights(const TradeGraph& g) {
    if (!is_connected(g)) throw Error(ErrorCode::NotConnected, "metropolis weights need a connected graph");
    const std::size_t n = g.size();
    SquareMatrix w(n);
    for (auto [i, j] : g.edges()) {
        const double wij = 1.0 / (1.0 + static_cast<double>(std::max(g.degree(i), g.degree(j))));
        w(i, j) = wij;
        w(j, i) = wij;
    }
    for (ProsumerId i = 0; i < n; ++i) {
        double off = 0.0;
        for (ProsumerId j : g.neighbors(i)) off += w(i, j);
        w(i, i) = 1.0 - off;
    }
    return g.with_weights(std::move(w));
}

double doubly_stochastic_defect(const SquareMatrix& w) {
    const std::size_t n = w.size();
    double defect = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        double col = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            row += w(i, j);
            col += w(j, i);
            defect = std::max(defect, std::abs(w(i, j) - w(j, i)));
        }
        defect = std::max({defect, std::abs(row - 1.0), std::abs(col - 1.0)});
    }
    return defect;
}

}  // namespace p2plearn
