#pragma once

#include <cstdint>
#include <utility>
#include <variant>
#include <vector>

#include "p2plearn/types.hpp"

namespace p2plearn {

/// Row-major square matrix of doubles.
class SquareMatrix {
public:
    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

    static SquareMatrix identity(std::size_t n);

    std::size_t size() const noexcept { return n_; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

    bool operator==(const SquareMatrix&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<double> data_;
};

using Edge = std::pair<ProsumerId, ProsumerId>;

struct CompleteTopology {
    bool operator==(const CompleteTopology&) const = default;
};

/// Spanning tree across the bipartition, then random seller-buyer edges until
/// the average degree reaches `degree` (or the graph is complete).
struct RandomTopology {
    double degree = 2.0;
    std::uint64_t seed = 0;
    bool operator==(const RandomTopology&) const = default;
};

using Topology = std::variant<CompleteTopology, RandomTopology>;

/// Undirected bipartite communication graph with a symmetric doubly stochastic
/// weight matrix. Self-loops carry the residual weight and are not listed in
/// `edges()`. Immutable after construction.
class TradeGraph {
public:
    TradeGraph() = default;

    /// Validates ids, rejects self-loops, duplicates and same-role edges.
    /// Weights start as the identity.
    TradeGraph(std::vector<Role> roles, std::vector<Edge> edges);

    std::size_t size() const noexcept { return roles_.size(); }
    const std::vector<Role>& roles() const noexcept { return roles_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const std::vector<ProsumerId>& neighbors(ProsumerId i) const { return adjacency_[i]; }
    std::size_t degree(ProsumerId i) const { return adjacency_[i].size(); }
    const SquareMatrix& weights() const noexcept { return weights_; }
    bool has_edge(ProsumerId i, ProsumerId j) const;

    /// True when every seller is adjacent to every buyer.
    bool is_complete_bipartite() const;

    TradeGraph with_weights(SquareMatrix weights) const;

private:
    std::vector<Role> roles_;
    std::vector<Edge> edges_;
    std::vector<std::vector<ProsumerId>> adjacency_;
    SquareMatrix weights_;
};

TradeGraph build_bipartite(const std::vector<ProsumerId>& sellers,
                           const std::vector<ProsumerId>& buyers, const Topology& topology);

/// Builds the graph from a role vector (id = position).
TradeGraph build_bipartite(const std::vector<Role>& roles, const Topology& topology);

bool is_connected(const TradeGraph& g);

/// Metropolis-Hastings weights: w_ij = 1/(1 + max(deg_i, deg_j)) on edges,
/// residual on the diagonal.
TradeGraph metropolis_weights(const TradeGraph& g);

/// Largest |row sum - 1|, |column sum - 1| and |w_ij - w_ji| over the matrix.
double doubly_stochastic_defect(const SquareMatrix& w);

}  // namespace p2plearn
