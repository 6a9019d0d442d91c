#include <doctest.h>

#include "lporl/numerics.hpp"
#include "lporl/rng.hpp"
#include "oracles.hpp"

using namespace lporl;

TEST_CASE("psd_power basics") {
    const Matrix id = Matrix::Identity(3, 3);
    CHECK((psd_power(id, 0.5) - id).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    CHECK((psd_power(id, -1.0) - id).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    CHECK((psd_power(id, 0.0) - id).cwiseAbs().maxCoeff() == 0.0);

    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 4.0;
    d(1, 1) = 9.0;
    const Matrix root = psd_power(d, 0.5);
    CHECK(root(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(root(1, 1) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(std::abs(root(0, 1)) < 1e-12);
}

TEST_CASE("psd_power round-trips on a random PSD matrix") {
    const Matrix m = testing::random_psd(6, 5);
    const Matrix root = psd_power(m, 0.5);
    CHECK((root * root - m).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("psd_power additivity over the exponent grid") {
    Matrix m = testing::random_psd(5, 11);
    m += 0.5 * Matrix::Identity(5, 5);  // keep well-conditioned
    const double exps[] = {-1.0, -0.5, 0.0, 0.5, 1.0};
    for (double a : exps)
        for (double b : exps) {
            if (a + b < -1.0 || a + b > 1.0) continue;
            const Matrix lhs = psd_power(m, a) * psd_power(m, b);
            const Matrix rhs = psd_power(m, a + b);
            CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-7);
        }
}

TEST_CASE("psd_power rejects asymmetry and near-singular inversion") {
    Matrix bad(2, 2);
    bad << 1.0, 0.5, 0.0, 1.0;
    CHECK_THROWS_AS(psd_power(bad, 1.0), NotSymmetric);

    Matrix singular = Matrix::Zero(2, 2);
    singular(0, 0) = 1.0;
    CHECK_THROWS_AS(psd_power(singular, -1.0), NearSingular);
    CHECK_NOTHROW(psd_power(singular, 0.5));
}

TEST_CASE("project_ball scales and is exactly idempotent") {
    const BallDomain unit(1.0);
    Vector v(2);
    v << 3.0, 4.0;
    const Vector p = project_ball(v, unit);
    CHECK(p[0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(0.8).epsilon(1e-15));

    Vector inside(2);
    inside << 0.1, -0.2;
    CHECK((project_ball(inside, unit) - inside).cwiseAbs().maxCoeff() == 0.0);

    Rng rng(7);
    const BallDomain two(2.0);
    for (int i = 0; i < 200; ++i) {
        const Vector x = 5.0 * rng.normal_vector(4);
        const Vector once = project_ball(x, two);
        const Vector twice = project_ball(once, two);
        CHECK((once - twice).cwiseAbs().maxCoeff() == 0.0);
        CHECK(once.norm() <= 2.0);
    }
}

TEST_CASE("project_ball is nonexpansive") {
    Rng rng(13);
    const BallDomain ball(1.5);
    for (int i = 0; i < 200; ++i) {
        const Vector x = 4.0 * rng.normal_vector(3);
        const Vector y = 4.0 * rng.normal_vector(3);
        const double before = (x - y).norm();
        const double after = (project_ball(x, ball) - project_ball(y, ball)).norm();
        CHECK(after <= before + 1e-12);
    }
}

TEST_CASE("clamp_interval") {
    CHECK(clamp_interval(0.5, 0.0, 1.0) == 0.5);
    CHECK(clamp_interval(-2.0, 0.0, 1.0) == 0.0);
    CHECK(clamp_interval(7.0, 0.0, 1.0) == 1.0);
}

TEST_CASE("softmax_rows normalization, shift invariance, argmax") {
    Matrix logits(2, 2);
    logits << 0.0, 0.0, std::log(2.0), 0.0;
    const Policy pi = softmax_rows(logits);
    CHECK(pi.probs(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(pi.probs(1, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(pi.probs(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    Matrix shifted = logits;
    shifted.row(1).array() += 100.0;
    const Policy pi2 = softmax_rows(shifted);
    CHECK((pi.probs - pi2.probs).cwiseAbs().maxCoeff() < 1e-12);

    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        Matrix z(1, 5);
        for (int a = 0; a < 5; ++a) z(0, a) = 3.0 * rng.normal();
        const Policy p = softmax_rows(z);
        CHECK(std::abs(p.probs.row(0).sum() - 1.0) <= 1e-12);
        int argmax_logit = 0, argmax_prob = 0;
        z.row(0).maxCoeff(&argmax_logit);
        p.probs.row(0).maxCoeff(&argmax_prob);
        CHECK(argmax_logit == argmax_prob);
    }

    Matrix inf_logits(1, 2);
    inf_logits << std::numeric_limits<double>::infinity(), 0.0;
    CHECK_THROWS_AS(softmax_rows(inf_logits), NonFinite);
}

TEST_CASE("ball domain rejects nonpositive radius") {
    CHECK_THROWS_AS(BallDomain(0.0), ConfigInvalid);
    CHECK_THROWS_AS(BallDomain(-1.0), ConfigInvalid);
}
