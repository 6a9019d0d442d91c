#pragma once

#include "lporl/errors.hpp"
#include "lporl/types.hpp"

namespace lporl {

/// Stationary stochastic policy: probs(x, a) = pi(a | x).
struct Policy {
    Matrix probs;

    int num_states() const { return static_cast<int>(probs.rows()); }
    int num_actions() const { return static_cast<int>(probs.cols()); }

    /// Rows must be nonnegative and sum to 1 within 1e-12.
    void validate() const {
        for (int x = 0; x < probs.rows(); ++x) {
            if ((probs.row(x).array() < 0.0).any())
                throw InvalidDistribution("policy row " + std::to_string(x) +
                                          " has a negative entry");
            if (std::abs(probs.row(x).sum() - 1.0) > 1e-12)
                throw InvalidDistribution("policy row " + std::to_string(x) +
                                          " does not sum to 1");
        }
    }
};

inline Policy uniform_policy(int num_states, int num_actions) {
    return Policy{Matrix::Constant(num_states, num_actions, 1.0 / num_actions)};
}

inline Policy deterministic_policy(const std::vector<int>& actions, int num_actions) {
    Matrix p = Matrix::Zero(static_cast<int>(actions.size()), num_actions);
    for (int x = 0; x < p.rows(); ++x) p(x, actions[x]) = 1.0;
    return Policy{p};
}

/// (1 - eps) * base + eps * uniform. eps = 1 recovers the uniform policy.
inline Policy eps_mix_policy(const Policy& base, double eps) {
    const int a = base.num_actions();
    Matrix p = (1.0 - eps) * base.probs +
               Matrix::Constant(base.num_states(), a, eps / a);
    return Policy{p};
}

}  // namespace lporl
