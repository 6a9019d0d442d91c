#include "lporl/sampling.hpp"

#include <cmath>

#include "lporl/errors.hpp"
#include "lporl/numerics.hpp"

namespace lporl {

Covariance::Covariance(Matrix lambda, double eig_floor)
    : lambda_(std::move(lambda)), floor_(eig_floor) {
    if (lambda_.rows() != lambda_.cols()) throw NotSymmetric("covariance is not square");
    const double asym = (lambda_ - lambda_.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12)
        throw NotSymmetric("covariance asymmetry " + std::to_string(asym));
    lambda_ = 0.5 * (lambda_ + lambda_.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(lambda_);
    if (eig.info() != Eigen::Success)
        throw NearSingular("covariance eigendecomposition failed");
    eigenvalues_ = eig.eigenvalues();
    eigenvectors_ = eig.eigenvectors();
    if (eigenvalues_.minCoeff() < -1e-12)
        throw NearSingular("covariance has eigenvalue " +
                           std::to_string(eigenvalues_.minCoeff()));
}

const Matrix& Covariance::power(double p) const {
    auto it = powers_.find(p);
    if (it == powers_.end())
        it = powers_.emplace(p, psd_power_from_eig(eigenvalues_, eigenvectors_, p, floor_)).first;
    return it->second;
}

double Covariance::trace_power(double p) const { return power(p).trace(); }

std::pair<OccupancyMeasure, Covariance> behavior_occupancy(const LinearMDP& mdp,
                                                           const Policy& behavior,
                                                           Setting setting) {
    OccupancyMeasure occ = occupancy(mdp, behavior, setting);
    Matrix lambda = mdp.features.transpose() * occ.mu.asDiagonal() * mdp.features;
    return {std::move(occ), Covariance(std::move(lambda))};
}

Transition DatasetCursor::next() {
    if (pos_ >= data_->size())
        throw DatasetExhausted("dataset of " + std::to_string(data_->size()) +
                               " records exhausted");
    return data_->transitions[pos_++];
}

ExactSampler::ExactSampler(const LinearMDP& mdp, const OccupancyMeasure& mu_b,
                           Setting setting, std::uint64_t seed)
    : mdp_(&mdp),
      mu_b_(mu_b.mu),
      p_(mdp.transition_matrix()),
      rewards_(mdp.rewards()),
      setting_(setting),
      rng_(seed) {}

Transition ExactSampler::next() {
    Transition w;
    if (setting_ == Setting::discounted) w.x0 = rng_.categorical(mdp_->init_dist);
    const int z = rng_.categorical(mu_b_);
    w.x = z / mdp_->num_actions;
    w.a = z % mdp_->num_actions;
    w.r = rewards_[z];
    w.x_next = rng_.categorical(p_.row(z).transpose());
    return w;
}

namespace {

/// One rollout record. Discounted: run the behavior policy from nu0 with a
/// Geom(1-gamma) stopping time, which lands (X,A) exactly on the discounted
/// occupancy. Average: burn in for 10|X| steps first.
Transition rollout_record(const LinearMDP& mdp, const Policy& behavior,
                          const Matrix& p, const Vector& r, Setting setting, Rng& rng) {
    Transition w;
    int x = rng.categorical(mdp.init_dist);
    if (setting == Setting::discounted) {
        w.x0 = rng.categorical(mdp.init_dist);
        while (rng.uniform() >= 1.0 - mdp.discount) {
            const int a = rng.categorical(behavior.probs.row(x).transpose());
            x = rng.categorical(p.row(mdp.pair_index(x, a)).transpose());
        }
    } else {
        const int burn_in = 10 * mdp.num_states;
        for (int step = 0; step < burn_in; ++step) {
            const int a = rng.categorical(behavior.probs.row(x).transpose());
            x = rng.categorical(p.row(mdp.pair_index(x, a)).transpose());
        }
    }
    w.x = x;
    w.a = rng.categorical(behavior.probs.row(x).transpose());
    const int z = mdp.pair_index(w.x, w.a);
    w.r = r[z];
    w.x_next = rng.categorical(p.row(z).transpose());
    return w;
}

}  // namespace

Dataset draw_dataset(const LinearMDP& mdp, const Policy& behavior, std::size_t n,
                     std::uint64_t seed, Setting setting, SampleSourceKind source) {
    if (n < 1) throw ConfigInvalid("dataset size must be at least 1");
    Dataset data;
    data.setting = setting;
    data.seed = seed;
    data.source = source;
    data.transitions.reserve(n);

    if (source == SampleSourceKind::exact_categorical) {
        ExactSampler sampler(mdp, occupancy(mdp, behavior, setting), setting, seed);
        for (std::size_t t = 0; t < n; ++t) data.transitions.push_back(sampler.next());
    } else {
        Rng rng(seed);
        const Matrix p = mdp.transition_matrix();
        const Vector r = mdp.rewards();
        for (std::size_t t = 0; t < n; ++t)
            data.transitions.push_back(rollout_record(mdp, behavior, p, r, setting, rng));
    }
    return data;
}

Covariance empirical_lambda(const Dataset& data, const LinearMDP& mdp) {
    if (data.transitions.empty()) throw ConfigInvalid("empty dataset");
    Matrix lambda = Matrix::Zero(mdp.dim, mdp.dim);
    for (const Transition& w : data.transitions) {
        const Vector phi = mdp.phi(w.x, w.a).transpose();
        lambda.noalias() += phi * phi.transpose();
    }
    lambda /= static_cast<double>(data.transitions.size());
    return Covariance(std::move(lambda));
}

}  // namespace lporl
