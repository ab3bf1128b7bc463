#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace p2plearn {

enum class ErrorCode {
    InvalidArgument,
    EmptySide,
    Disconnected,
    NotConnected,
    EmptyMarket,
    NoConvergence,
    Unbalanced,
    MissingSide,
    DegeneratePrice,
    EmptyInterval,
    GlobalConditionViolated,
    NonOverlapping,
    InvalidLocalK,
    DegenerateDenominator,
    ParseError,
    SchemaError,
    IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Single exception type for the library. `step` is filled in by the pipeline
// so callers can tell which stage of the learning procedure failed.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}
    Error(ErrorCode code, const std::string& message, std::string step)
        : std::runtime_error(message), code_(code), step_(std::move(step)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& step() const noexcept { return step_; }

private:
    ErrorCode code_;
    std::string step_;
};

}  // namespace p2plearn
