#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace plq {

enum class ErrorCode {
    DimensionMismatch,
    NonPsdM,
    NonInjectiveB,
    NonInjectiveComposite,
    EmptyU,
    BadParameter,
    EvaluationDidNotConverge,
    SingularM,
    UnsupportedU,
    NotCoercive,
    NotSymmetric,
    NonSpdQ,
    BadFraction,
    NotPositiveDefinite,
    SingularG,
    SingularT,
    NoInteriorFound,
    IterationLimit,
    NumericalBreakdown,
    ConditionViolated,
    BadKind,
    NotEpsilonLoss,
    InnerSolveFailed,
    LineSearchFailed,
    ParseError,
    IoError,
};

std::string_view to_string(ErrorCode code);

/// Every recoverable failure in the library is reported as a plq::Error
/// carrying a machine-readable code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace plq
