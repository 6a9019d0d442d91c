#pragma once

#include <stdexcept>
#include <string>

namespace lporl {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Model construction / validation.
struct InvalidDistribution : Error { using Error::Error; };
struct RewardOutOfRange : Error { using Error::Error; };
struct RankDeficient : Error { using Error::Error; };

// Exact-solver failures.
struct SingularSystem : Error { using Error::Error; };
struct NotUnichain : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };

// Numerical kernels.
struct NotSymmetric : Error { using Error::Error; };
struct NearSingular : Error { using Error::Error; };
struct NonFinite : Error { using Error::Error; };

// Solvers and harness.
struct DatasetExhausted : Error { using Error::Error; };
struct ConfigInvalid : Error { using Error::Error; };
struct AssumptionViolated : Error { using Error::Error; };
struct UnsupportedPoint : Error { using Error::Error; };

}  // namespace lporl
