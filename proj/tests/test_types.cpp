#include <doctest.h>

#include "p2plearn/error.hpp"
#include "p2plearn/types.hpp"

using namespace p2plearn;

TEST_CASE("role names") {
    CHECK(to_string(Role::Seller) == "seller");
    CHECK(to_string(Role::Buyer) == "buyer");
}

TEST_CASE("power bounds match exactly one role") {
    CHECK(PowerBounds::seller(2.0).consistent_with(Role::Seller));
    CHECK_FALSE(PowerBounds::seller(2.0).consistent_with(Role::Buyer));
    CHECK(PowerBounds::buyer(-3.0).consistent_with(Role::Buyer));
    CHECK_FALSE(PowerBounds::buyer(-3.0).consistent_with(Role::Seller));
    CHECK_FALSE(PowerBounds::seller(0.0).consistent_with(Role::Seller));
    CHECK_FALSE(PowerBounds{-1.0, 1.0}.consistent_with(Role::Seller));
    CHECK_FALSE(PowerBounds{-1.0, 1.0}.consistent_with(Role::Buyer));
}

TEST_CASE("price interval") {
    const PriceInterval p{19.0, 23.0};
    CHECK(p.valid());
    CHECK(p.width() == doctest::Approx(4.0));
    CHECK(p.contains_strictly(21.0));
    CHECK_FALSE(p.contains_strictly(19.0));
    CHECK_FALSE(p.contains_strictly(23.0));
    CHECK_FALSE(PriceInterval{0.0, 1.0}.valid());
    CHECK_FALSE(PriceInterval{3.0, 2.0}.valid());
    CHECK(PriceInterval{2.0, 2.0}.valid());
}

TEST_CASE("cost params validity") {
    CHECK(CostParams{1.0, 20.0}.valid());
    CHECK_FALSE(CostParams{0.0, 20.0}.valid());
    CHECK_FALSE(CostParams{1.0, -1.0}.valid());
}

TEST_CASE("market input validation") {
    const std::vector<Role> roles{Role::Seller, Role::Buyer};
    CHECK_NOTHROW(validate_market_inputs(2, {PowerBounds::seller(1), PowerBounds::buyer(-1)}, roles));
    CHECK_THROWS_AS(validate_market_inputs(3, {PowerBounds::seller(1), PowerBounds::buyer(-1)}, roles), Error);
    CHECK_THROWS_AS(validate_market_inputs(2, {PowerBounds::buyer(-1), PowerBounds::buyer(-1)}, roles), Error);
    CHECK(count_role(roles, Role::Seller) == 1);
}

TEST_CASE("errors carry code and step") {
    const Error e(ErrorCode::EmptySide, "no buyers", "graph");
    CHECK(e.code() == ErrorCode::EmptySide);
    CHECK(e.step() == "graph");
    CHECK(std::string(e.what()) == "no buyers");
    CHECK(to_string(ErrorCode::NoConvergence) == "NoConvergence");
}
