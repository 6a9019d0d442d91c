#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace lporl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Which optimality criterion a quantity refers to.
enum class Setting { discounted, average };

inline const char* to_string(Setting s) {
    return s == Setting::discounted ? "discounted" : "average";
}

}  // namespace lporl
