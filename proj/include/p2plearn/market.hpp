#pragma once

#include <map>
#include <span>
#include <vector>

#include "p2plearn/trade_graph.hpp"
#include "p2plearn/types.hpp"

namespace p2plearn {

enum class ConstraintTag {
    SignViolation,  // seller trade <= 0 or buyer trade >= 0
    UpperBound,     // seller trade > p_sell_max
    LowerBound,     // buyer trade < p_buy_min
};

std::string_view to_string(ConstraintTag tag) noexcept;

struct Violation {
    ProsumerId id = 0;
    ConstraintTag tag = ConstraintTag::SignViolation;
    bool operator==(const Violation&) const = default;
};

struct ClearingResult {
    double lambda_star = 0.0;
    std::vector<double> trades;  // indexed by ProsumerId; > 0 sells, < 0 buys
    bool feasible = false;
    std::vector<Violation> violations;

    double imbalance() const noexcept;
};

/// Unique clearing price of the unconstrained problem: (sum b/a) / (sum 1/a).
double clearing_price(std::span<const CostParams> params);

/// Optimal total trade of one prosumer at price `lambda`: (lambda - b) / (2a).
double optimal_trade(const CostParams& p, double lambda) noexcept;

/// Strict feasibility: sellers 0 < p <= p_sell_max, buyers p_buy_min <= p < 0.
/// A zero trade counts as unsuccessful trading.
std::vector<Violation> check_feasibility(std::span<const double> trades,
                                         const std::vector<PowerBounds>& bounds,
                                         const std::vector<Role>& roles);

/// Closed-form clearing. Never clips: bound and sign failures are reported in
/// `violations`, not repaired.
ClearingResult clear_market(std::span<const CostParams> params, const std::vector<PowerBounds>& bounds,
                            const std::vector<Role>& roles);

struct OracleOptions {
    double tol = 1e-8;
    int max_iterations = 200'000;
};

struct OracleResult {
    ClearingResult clearing;
    int iterations = 0;
    double kkt_residual = 0.0;
};

/// Projected-gradient solution of
///   min sum a_i p_i^2 + b_i p_i  s.t.  sum p_i = 0,  box/sign limits per role,
/// working in the reduced (total-trade) space. `lambda_star` is the multiplier
/// of the balance constraint. Throws NoConvergence if the projected-gradient
/// residual is still above `tol` after the iteration budget.
OracleResult qp_oracle(std::span<const CostParams> params, const std::vector<PowerBounds>& bounds,
                       const std::vector<Role>& roles, const OracleOptions& options = {});

using BilateralTrades = std::map<Edge, double>;

/// Recovers antisymmetric bilateral trades P_ij (both (i,j) and (j,i) keys are
/// present) whose row sums equal `trades`. On a complete bipartite graph with
/// role-consistent signs every seller splits its sale across buyers in
/// proportion to their demand; otherwise the minimum-norm flow on the graph's
/// edges is returned.
BilateralTrades realize_bilateral(std::span<const double> trades, const TradeGraph& g);

}  // namespace p2plearn
