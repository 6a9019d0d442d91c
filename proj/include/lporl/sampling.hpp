#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <utility>
#include <vector>

#include "lporl/linmdp.hpp"
#include "lporl/rng.hpp"
#include "lporl/types.hpp"

namespace lporl {

/// One offline observation. x0 is the independent initial-state draw used by
/// the discounted setting; it is -1 in the average setting.
struct Transition {
    int x0 = -1;
    int x = 0;
    int a = 0;
    double r = 0.0;
    int x_next = 0;
};

enum class SampleSourceKind { exact_categorical, rollout };

inline const char* to_string(SampleSourceKind s) {
    return s == SampleSourceKind::exact_categorical ? "exact-categorical" : "rollout";
}

/// Immutable i.i.d. transition dataset. Regenerating with the same seed
/// yields identical records.
struct Dataset {
    std::vector<Transition> transitions;
    Setting setting = Setting::discounted;
    std::uint64_t seed = 0;
    SampleSourceKind source = SampleSourceKind::exact_categorical;

    std::size_t size() const { return transitions.size(); }
};

/// Second-moment matrix of the behavior features, Lambda = E[phi phi^T],
/// with cached symmetric powers. The cache is filled before a solver loop
/// starts and is read-only afterwards; concurrent lazy population is not
/// synchronized.
class Covariance {
  public:
    explicit Covariance(Matrix lambda, double eig_floor = 1e-10);

    const Matrix& lambda() const { return lambda_; }
    double eig_floor() const { return floor_; }

    /// Lambda^p; p = 0 is the identity exactly. Negative powers raise
    /// NearSingular when any eigenvalue is below the floor.
    const Matrix& power(double p) const;

    double min_eigenvalue() const { return eigenvalues_.minCoeff(); }
    double norm2() const { return eigenvalues_.maxCoeff(); }
    double trace_power(double p) const;

    /// True when a negative power would fail. Reported, not raised: the
    /// c = 1 path never inverts Lambda.
    bool singular() const { return min_eigenvalue() < floor_; }

    int dim() const { return static_cast<int>(lambda_.rows()); }

  private:
    Matrix lambda_;
    double floor_;
    Vector eigenvalues_;
    Matrix eigenvectors_;
    mutable std::map<double, Matrix> powers_;
};

/// Exact behavior occupancy and feature covariance
/// Lambda = sum_z mu_B(z) phi(z) phi(z)^T.
std::pair<OccupancyMeasure, Covariance> behavior_occupancy(const LinearMDP& mdp,
                                                           const Policy& behavior,
                                                           Setting setting);

/// Streaming supplier of i.i.d. transitions.
class SampleSource {
  public:
    virtual ~SampleSource() = default;
    virtual Transition next() = 0;
};

/// Replays a fixed dataset in order; throws DatasetExhausted at the end.
class DatasetCursor : public SampleSource {
  public:
    explicit DatasetCursor(const Dataset& data) : data_(&data) {}
    Transition next() override;
    std::size_t consumed() const { return pos_; }

  private:
    const Dataset* data_;
    std::size_t pos_ = 0;
};

/// Draws fresh records on demand, categorically from the exact behavior
/// occupancy. Equivalent in law to a pre-drawn exact-categorical dataset.
class ExactSampler : public SampleSource {
  public:
    ExactSampler(const LinearMDP& mdp, const OccupancyMeasure& mu_b, Setting setting,
                 std::uint64_t seed);
    Transition next() override;

  private:
    const LinearMDP* mdp_;
    Vector mu_b_;
    Matrix p_;
    Vector rewards_;
    Setting setting_;
    Rng rng_;
};

/// i.i.d. dataset of n records.
///
/// exact_categorical (default): X0 ~ nu0 (discounted only), (X,A) drawn
/// categorically from the exact behavior occupancy, X' ~ p(.|X,A),
/// R = r(X,A). rollout: (X,A) is produced by actually rolling out the
/// behavior policy -- with a Geom(1-gamma) stopping time from nu0 in the
/// discounted setting (exact in law), or with a burn-in of 10|X| steps in
/// the average setting (approximate).
Dataset draw_dataset(const LinearMDP& mdp, const Policy& behavior, std::size_t n,
                     std::uint64_t seed, Setting setting,
                     SampleSourceKind source = SampleSourceKind::exact_categorical);

/// Empirical covariance (1/n) sum_t phi(x_t,a_t) phi(x_t,a_t)^T.
Covariance empirical_lambda(const Dataset& data, const LinearMDP& mdp);

}  // namespace lporl
