#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unistd.h>

#include "kinbc/boundary.hpp"
#include "kinbc/grid.hpp"
#include "kinbc/model.hpp"

namespace kinbc::testing {

/// Random discrete-velocity model: 3..8 species in 1..3 dimensions, nonzero
/// velocities and 1..6 collision channels with rates in [0.05, 2].
inline DiscreteVelocityModel random_model(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> n_dist(3, 8);
    std::uniform_int_distribution<int> d_dist(1, 3);
    std::uniform_real_distribution<double> comp(-2.0, 2.0);
    std::uniform_real_distribution<double> rate(0.05, 2.0);
    const int n = n_dist(rng);
    const int d = d_dist(rng);
    Eigen::MatrixXd u(n, d);
    for (int k = 0; k < n; ++k) {
        do {
            for (int j = 0; j < d; ++j) u(k, j) = comp(rng);
        } while (u.row(k).norm() < 0.1);
    }
    std::uniform_int_distribution<int> species(0, n - 1);
    std::uniform_int_distribution<int> channels(1, 6);
    std::vector<DiscreteVelocityModel::Collision> coll;
    const int m = channels(rng);
    while (static_cast<int>(coll.size()) < m) {
        const int i = species(rng), j = species(rng), k = species(rng), l = species(rng);
        const std::multiset<int> a{i, j}, b{k, l};
        if (a == b) continue;
        coll.push_back({i, j, k, l, rate(rng)});
    }
    return DiscreteVelocityModel(u, coll);
}

inline Eigen::VectorXd random_state(std::mt19937_64& rng, int n, double lo = 0.2, double hi = 5.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Eigen::VectorXd f(n);
    for (int k = 0; k < n; ++k) f[k] = dist(rng);
    return f;
}

/// Random collision equilibrium exp(psi), psi a random collision invariant
/// (projection of a random vector onto the null space of L(1)).
inline Eigen::VectorXd random_equilibrium(const DiscreteVelocityModel& model, std::mt19937_64& rng) {
    const int n = model.n_species();
    const Eigen::MatrixXd l = onsager_matrix(model, Eigen::VectorXd::Ones(n));
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l);
    const double tol = 1e-9 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Eigen::VectorXd g(n);
    for (int k = 0; k < n; ++k) g[k] = dist(rng);
    Eigen::VectorXd psi = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < n; ++k) {
        if (std::abs(es.eigenvalues()[k]) > tol) continue;
        const Eigen::VectorXd v = es.eigenvectors().col(k);
        psi += v.dot(g) * v;
    }
    return psi.array().exp().matrix();
}

/// Quadrature of sum_i w_i |s_i| f_i^2 over every face: the scale against
/// which the signed boundary form is compared.
inline double trace_energy(const Field& f, const Grid& grid, const DiscreteVelocityModel& model,
                           const BoundaryWeights& weights) {
    const BoundaryClassification cls(model, grid.domain());
    double e = 0.0;
    for (const auto& fg : grid.faces()) {
        for (Eigen::Index s = 0; s < fg.size(); ++s) {
            const Eigen::Index node = fg.nodes[static_cast<std::size_t>(s)];
            const Eigen::VectorXd w = weights.diagonal(grid.position(node));
            for (int i = 0; i < model.n_species(); ++i)
                e += fg.weights[s] * w[i] * std::abs(cls.normal_speed(fg.face.index(), i)) * f(i, node) * f(i, node);
        }
    }
    return e;
}

/// Smooth random field: per species, a random combination of
/// prod_j cos(m_j pi x_j) with mode numbers below `modes`.
inline Field smooth_random_field(std::mt19937_64& rng, const Grid& grid, int n_species, int modes = 4) {
    std::normal_distribution<double> coef;
    const int d = grid.dim();
    int terms = 1;
    for (int j = 0; j < d; ++j) terms *= modes;
    Eigen::MatrixXd a(n_species, terms);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = coef(rng);
    const double pi = std::acos(-1.0);
    Field f(n_species, grid.node_count());
    for (Eigen::Index p = 0; p < grid.node_count(); ++p) {
        const Eigen::VectorXd x = grid.position(p);
        Eigen::VectorXd basis(terms);
        for (int t = 0; t < terms; ++t) {
            double b = 1.0;
            int rem = t;
            for (int j = 0; j < d; ++j) {
                b *= std::cos((rem % modes) * pi * (x[j] - grid.domain().lower()[j]) / grid.domain().extent(j));
                rem /= modes;
            }
            basis[t] = b;
        }
        f.col(p) = a * basis;
    }
    return f;
}

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("kinbc_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::string file(const std::string& name, const std::string& contents) const {
        const auto p = path_ / name;
        std::ofstream(p) << contents;
        return p.string();
    }

private:
    std::filesystem::path path_;
};

}  // namespace kinbc::testing
