#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "kinbc/lyapunov.hpp"
#include "support.hpp"

using namespace kinbc;

namespace {

const Eigen::Vector4d kFe(4, 3, 2, 6);

}  // namespace

TEST_CASE("weight matrix entries") {
    const auto model = build_coplanar(1.0, 0.1);
    const SteadyState fe(model, kFe);
    const Eigen::Vector2d x(0.3, 0.7);
    const auto w = weight_matrix(model, fe, 2.0, x).diagonal();
    CHECK(w[0] == doctest::Approx(2.0 / 4.0 + std::exp(-0.3)).epsilon(1e-15));
    CHECK(w[1] == doctest::Approx(2.0 / 3.0 + std::exp(0.3)).epsilon(1e-15));
    CHECK(w[2] == doctest::Approx(2.0 / 2.0 + std::exp(-0.7)).epsilon(1e-15));
    CHECK(w[3] == doctest::Approx(2.0 / 6.0 + std::exp(0.7)).epsilon(1e-15));
}

TEST_CASE("sample lattice includes the corners") {
    const BoxDomain box(Eigen::Vector2d(-1.0, 0.0), Eigen::Vector2d(2.0, 0.5));
    const auto pts = sample_points(box, 4);
    CHECK(pts.size() == 16);
    CHECK(pts.front() == box.lower());
    CHECK(pts.back() == box.upper());
    CHECK_THROWS_AS(sample_points(box, 1), ParameterError);
}

TEST_CASE("coplanar constants") {
    const auto model = build_coplanar(1.0, 0.1);
    const SteadyState fe(model, kFe);
    const BoxDomain box = BoxDomain::unit(2);
    const auto d = decompose(model, fe);
    const auto k = constants(model, fe, box, d);
    CHECK(k.rank == 1);
    CHECK(k.lambda == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(k.c1 > 0.0);
    CHECK(k.c2 >= 0.0);

    const double alpha = select_alpha(k.lambda, k.c1, k.c2);
    CHECK(alpha == doctest::Approx(std::max(kAlphaFloor, (k.c2 - k.c1) / (2.0 * k.lambda)) * 1.1));
    const auto cert = certify(model, fe, box, d);
    CHECK(cert.valid);
    CHECK(cert.alpha == doctest::Approx(alpha));
    CHECK(cert.c_tilde > 0.0);
    CHECK(cert.decay_rate == doctest::Approx(cert.c_tilde / cert.lambda_max));
    CHECK(cert.norm_rate == doctest::Approx(cert.decay_rate / 2.0));
    CHECK(cert.overshoot == doctest::Approx(std::sqrt(cert.lambda_max / cert.lambda_min)));
    // weight extrema of alpha / f_i + exp(-u_i . x) are attained at corners
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int i = 0; i < 4; ++i)
        for (double x : {0.0, 1.0})
            for (double y : {0.0, 1.0}) {
                const double w = alpha / kFe[i] + std::exp(-model.velocity(i).dot(Eigen::Vector2d(x, y)));
                lo = std::min(lo, w);
                hi = std::max(hi, w);
            }
    CHECK(cert.lambda_min == doctest::Approx(lo).epsilon(1e-14));
    CHECK(cert.lambda_max == doctest::Approx(hi).epsilon(1e-14));

    // an alpha below the selection threshold leaves no certificate
    const auto weak = certify(model, fe, box, d, 1e-3);
    CHECK_FALSE(weak.valid);
    CHECK(weak.decay_rate == 0.0);
}

TEST_CASE("C1 is stable under lattice refinement") {
    std::mt19937_64 rng(12);
    const auto model = build_coplanar(1.0, 0.1);
    const SteadyState fe(model, kFe);
    const auto d = decompose(model, fe);
    const BoxDomain box = BoxDomain::unit(2);
    const double coarse = constants(model, fe, box, d, 8).c1;
    const double fine = constants(model, fe, box, d, 29).c1;
    CHECK(std::abs(coarse - fine) <= 0.01 * fine);

    for (int trial = 0; trial < 20; ++trial) {
        const auto m = testing::random_model(rng);
        if (m.dim() > 2) continue;
        const SteadyState s(m, testing::random_equilibrium(m, rng), 1e-9);
        const auto dd = decompose(m, s);
        const BoxDomain b = BoxDomain::unit(m.dim());
        const double c8 = constants(m, s, b, dd, 8).c1;
        const double c29 = constants(m, s, b, dd, 29).c1;
        CHECK(std::abs(c8 - c29) <= 0.01 * c29);
    }
}

TEST_CASE("functional is sandwiched by the weight extrema") {
    const auto model = build_coplanar(1.0, 0.1);
    const SteadyState fe(model, kFe);
    const BoxDomain box = BoxDomain::unit(2);
    const Grid grid(box, {20, 20});
    const double alpha = 3.0;
    const auto [lo, hi] = weight_extrema(model, fe, alpha, box);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> dist;
    for (int trial = 0; trial < 50; ++trial) {
        Field f(4, grid.node_count());
        for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = dist(rng);
        const double l = functional(f, grid, model, fe, alpha);
        double norm2 = 0.0;
        for (Eigen::Index p = 0; p < grid.node_count(); ++p)
            norm2 += grid.quadrature_weights()[p] * f.col(p).squaredNorm();
        CHECK(l >= lo * norm2 * (1.0 - 1e-12));
        CHECK(l <= hi * norm2 * (1.0 + 1e-12));
    }
}

TEST_CASE("collisionless model uses the exponential weight alone") {
    const auto model = build_coplanar(1.0, 0.0);
    const SteadyState fe(model, Eigen::Vector4d::Ones());
    const auto d = decompose(model, fe);
    const auto cert = certify(model, fe, BoxDomain::unit(2), d);
    CHECK(cert.rank == 0);
    CHECK(cert.alpha == 0.0);
    CHECK(cert.valid);
    CHECK(cert.c_tilde == doctest::Approx(cert.c1));
    CHECK_THROWS_AS(select_alpha(0.0, 1.0, 1.0), ParameterError);
}
