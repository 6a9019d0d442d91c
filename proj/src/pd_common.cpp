#include "lporl/pd_common.hpp"

#include "lporl/errors.hpp"

namespace lporl {

Vector PolicyLogits::probs_at(const Matrix& features, int num_actions, int x) const {
    Vector logits(num_actions);
    for (int a = 0; a < num_actions; ++a)
        logits[a] = alpha * features.row(x * num_actions + a).dot(accum);
    return softmax(logits);
}

Policy PolicyLogits::materialize(const Matrix& features, int num_states,
                                 int num_actions) const {
    Matrix probs(num_states, num_actions);
    for (int x = 0; x < num_states; ++x)
        probs.row(x) = probs_at(features, num_actions, x).transpose();
    return Policy{probs};
}

void SolverConfig::validate(Setting setting) const {
    if (t_outer < 1 || k_inner < 1)
        throw ConfigInvalid("T and K must be at least 1");
    if (c != 0.5 && c != 1.0) throw ConfigInvalid("c must be 1/2 or 1");
    if (alpha < 0.0 || zeta < 0.0 || eta < 0.0)
        throw ConfigInvalid("learning rates must be nonnegative");
    if (setting == Setting::average && xi < 0.0)
        throw ConfigInvalid("xi must be nonnegative");
    if (!(d_theta > 0.0) || !(d_beta > 0.0))
        throw ConfigInvalid("ball radii must be positive");
    if (eval_every < 1) throw ConfigInvalid("eval_every must be at least 1");
}

Policy SolverResult::policy_at(const Matrix& features, int num_states,
                               int num_actions, int t) const {
    PolicyLogits logits{policy_accums.at(t), config.alpha};
    return logits.materialize(features, num_states, num_actions);
}

std::vector<Policy> SolverResult::all_policies(const Matrix& features, int num_states,
                                               int num_actions) const {
    std::vector<Policy> out;
    out.reserve(policy_accums.size());
    for (std::size_t t = 0; t < policy_accums.size(); ++t)
        out.push_back(policy_at(features, num_states, num_actions, static_cast<int>(t)));
    return out;
}

}  // namespace lporl
