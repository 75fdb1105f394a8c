#include <doctest.h>

#include <random>

#include "kinbc/stability.hpp"
#include "support.hpp"

using namespace kinbc;

TEST_CASE("coplanar decomposition: rank one with Lambda = 1.5") {
    const auto model = build_coplanar(1.0, 0.1);
    const SteadyState fe(model, Eigen::Vector4d(4, 3, 2, 6));
    const auto d = decompose(model, fe);
    CHECK(d.rank == 1);
    REQUIRE(d.lambda.size() == 1);
    // rank-one oracle: sigma f1 f2 |Lambda0^{1/2} (1, 1, -1, -1)|^2
    const Eigen::Vector4d v(1, 1, -1, -1);
    const double oracle = 0.1 * 4.0 * 3.0 * (v.array().square() / fe.values().array()).sum();
    CHECK(oracle == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(std::abs(d.lambda[0] - oracle) <= 1e-12);

    const auto res = structural_residuals(d, source_jacobian(model, fe));
    CHECK(res.similarity <= 1e-10);
    CHECK(res.symmetrizer <= 1e-10);
    CHECK((d.p * d.p_inv - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("rank equals the rank of L found by SVD on random models") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 100; ++trial) {
        const auto model = testing::random_model(rng);
        const SteadyState fe(model, testing::random_equilibrium(model, rng), 1e-9);
        const auto d = decompose(model, fe);

        const Eigen::MatrixXd l = onsager_matrix(model, fe.values());
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(l);
        svd.setThreshold(1e-9);
        CHECK(d.rank == svd.rank());

        const auto res = structural_residuals(d, source_jacobian(model, fe));
        const double scale = std::max(1.0, d.lambda.size() ? d.lambda.maxCoeff() : 1.0);
        CHECK(res.similarity <= 1e-10 * scale);
        CHECK(res.symmetrizer <= 1e-10 * scale);
        if (d.rank > 0) CHECK(d.lambda.minCoeff() > 0.0);
        const int n = model.n_species();
        CHECK((d.p * d.p_inv - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("collisionless model has rank zero") {
    const auto model = build_coplanar(1.0, 0.0);
    const SteadyState fe(model, Eigen::Vector4d(1, 2, 3, 4));
    const auto d = decompose(model, fe);
    CHECK(d.rank == 0);
    CHECK(d.lambda.size() == 0);
    CHECK(d.dissipation_block().isZero(0.0));
}

TEST_CASE("zero eigenvalue threshold") {
    CHECK(zero_eigenvalue_threshold(Eigen::Vector3d(0.0, 1e-20, 0.0)) == 1e-14);
    CHECK(zero_eigenvalue_threshold(Eigen::Vector2d(0.0, 2.0)) == doctest::Approx(2e-9));
}

TEST_CASE("Lambda0 is the inverse steady state") {
    const auto l0 = lambda0(Eigen::Vector3d(2.0, 4.0, 0.5));
    CHECK(l0.diagonal()[0] == 0.5);
    CHECK(l0.diagonal()[2] == 2.0);
    CHECK_THROWS_AS(lambda0(Eigen::Vector2d(1.0, 0.0)), DomainError);
}
