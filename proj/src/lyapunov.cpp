#include "kinbc/lyapunov.hpp"

#include <cmath>
#include <limits>

#include <Eigen/SVD>

namespace kinbc {

DiagonalXd weight_matrix(const DiscreteVelocityModel& model, const SteadyState& fe, double alpha,
                         const Eigen::Ref<const Eigen::VectorXd>& x) {
    return DiagonalXd(BoundaryWeights::lyapunov(model, fe, alpha).diagonal(x));
}

Eigen::MatrixXd node_weights(const Grid& grid, const BoundaryWeights& weights) {
    Eigen::MatrixXd w;
    for (Eigen::Index p = 0; p < grid.node_count(); ++p) {
        const Eigen::VectorXd d = weights.diagonal(grid.position(p));
        if (p == 0) w.resize(d.size(), grid.node_count());
        w.col(p) = d;
    }
    return w;
}

double weighted_energy(const Field& field, const Grid& grid, const Eigen::MatrixXd& weights) {
    if (field.cols() != grid.node_count() || weights.rows() != field.rows() || weights.cols() != field.cols())
        throw DomainError("weighted_energy: field does not match the grid");
    const Eigen::VectorXd& q = grid.quadrature_weights();
    std::vector<double> terms(static_cast<std::size_t>(field.cols()));
    for (Eigen::Index p = 0; p < field.cols(); ++p)
        terms[static_cast<std::size_t>(p)] = q[p] * (weights.col(p).array() * field.col(p).array().square()).sum();
    return pairwise_sum(terms);
}

double functional(const Field& field, const Grid& grid, const DiscreteVelocityModel& model, const SteadyState& fe,
                  double alpha) {
    return weighted_energy(field, grid, node_weights(grid, BoundaryWeights::lyapunov(model, fe, alpha)));
}

std::vector<Eigen::VectorXd> sample_points(const BoxDomain& domain, int per_axis) {
    if (per_axis < 2) throw ParameterError("sample lattice needs at least 2 points per axis");
    const int d = domain.dim();
    Eigen::Index total = 1;
    for (int j = 0; j < d; ++j) total *= per_axis;
    std::vector<Eigen::VectorXd> pts;
    pts.reserve(static_cast<std::size_t>(total));
    for (Eigen::Index t = 0; t < total; ++t) {
        Eigen::VectorXd x(d);
        Eigen::Index rem = t;
        for (int j = 0; j < d; ++j) {
            const int i = static_cast<int>(rem % per_axis);
            rem /= per_axis;
            x[j] = i == per_axis - 1 ? domain.upper()[j]
                                     : domain.lower()[j] + domain.extent(j) * i / (per_axis - 1);
        }
        pts.push_back(std::move(x));
    }
    return pts;
}

namespace {

double spectral_norm(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues()[0];
}

}  // namespace

LyapunovConstants constants(const DiscreteVelocityModel& model, const SteadyState& /*fe*/, const BoxDomain& domain,
                            const StabilityDecomposition& decomposition, int samples_per_axis) {
    const int n = model.n_species();
    const int r = decomposition.rank;
    const int z = n - r;
    const auto pts = sample_points(domain, samples_per_axis);
    const Eigen::MatrixXd& u = model.velocities();
    const Eigen::VectorXd speed_sq = u.rowwise().squaredNorm();
    const Eigen::MatrixXd& p_inv = decomposition.p_inv;

    LyapunovConstants out;
    out.rank = r;
    out.lambda = r > 0 ? decomposition.lambda.minCoeff() : std::numeric_limits<double>::quiet_NaN();

    out.c1 = std::numeric_limits<double>::infinity();
    for (const auto& x : pts) {
        const Eigen::VectorXd e = (-u * x).array().exp().matrix();
        const Eigen::MatrixXd m = p_inv.transpose() * speed_sq.cwiseProduct(e).asDiagonal() * p_inv;
        const Eigen::MatrixXd sym = (m + m.transpose()) / 2.0;
        out.c1 = std::min(out.c1, eigh_symmetric(sym).values[0]);
    }
    if (!(out.c1 > 0.0)) throw ModelError("transport coercivity constant C1 is not positive");

    out.c2 = 0.0;
    if (r > 0) {
        const DiagonalXd lam(decomposition.lambda);
        for (const auto& x : pts) {
            const Eigen::VectorXd e = (-u * x).array().exp().matrix();
            const Eigen::MatrixXd mu = p_inv.transpose() * e.asDiagonal() * p_inv;
            const Eigen::MatrixXd mu12 = mu.topRightCorner(z, r);
            const Eigen::MatrixXd mu22 = mu.bottomRightCorner(r, r);
            const Eigen::MatrixXd sym = mu22 * lam + lam * mu22;
            const double cross = spectral_norm(mu12 * lam);
            const auto eig = eigh_symmetric((sym + sym.transpose()) / 2.0);
            const double diag = std::max(std::abs(eig.values[0]), std::abs(eig.values[r - 1]));
            out.c2 = std::max(out.c2, 2.0 * cross * cross / out.c1 + diag);
        }
    }
    return out;
}

double select_alpha(double lambda, double c1, double c2, double margin) {
    if (!(lambda > 0.0)) throw ParameterError("select_alpha needs lambda > 0; with r = 0 use the exp-only functional");
    if (!(margin > 0.0)) throw ParameterError("alpha margin must be positive");
    return std::max(kAlphaFloor, (c2 - c1) / (2.0 * lambda)) * (1.0 + margin);
}

std::pair<double, double> weight_extrema(const DiscreteVelocityModel& model, const SteadyState& fe, double alpha,
                                         const BoxDomain& domain, int samples_per_axis) {
    const BoundaryWeights w = BoundaryWeights::lyapunov(model, fe, alpha);
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    // exp(-u.x) is extremal at corners; the lattice contains them
    for (const auto& x : sample_points(domain, samples_per_axis)) {
        const Eigen::VectorXd d = w.diagonal(x);
        lo = std::min(lo, d.minCoeff());
        hi = std::max(hi, d.maxCoeff());
    }
    return {lo, hi};
}

LyapunovCertificate certify(const DiscreteVelocityModel& model, const SteadyState& fe, const BoxDomain& domain,
                            const StabilityDecomposition& decomposition, std::optional<double> alpha, double margin,
                            int samples_per_axis) {
    const LyapunovConstants k = constants(model, fe, domain, decomposition, samples_per_axis);
    LyapunovCertificate c;
    c.rank = k.rank;
    c.lambda_small = k.lambda;
    c.c1 = k.c1;
    c.c2 = k.c2;
    c.coercivity = fe.values().cwiseInverse().minCoeff();

    const int n = model.n_species();
    double raw = 0.0;
    if (k.rank == 0) {
        c.alpha = 0.0;
        raw = k.c1;
    } else {
        c.alpha = alpha ? *alpha : select_alpha(k.lambda, k.c1, k.c2, margin);
        if (!(c.alpha > 0.0) || !std::isfinite(c.alpha)) throw ParameterError("alpha must be positive");
        const double q_coeff = 2.0 * k.lambda * c.alpha - k.c2 + k.c1;
        raw = k.rank == n ? q_coeff : std::min(q_coeff, k.c1 / 2.0);
    }
    std::tie(c.lambda_min, c.lambda_max) = weight_extrema(model, fe, c.alpha, domain, samples_per_axis);
    c.c_tilde = raw * c.coercivity;
    c.valid = c.c_tilde > 0.0;
    c.decay_rate = c.valid ? c.c_tilde / c.lambda_max : 0.0;
    c.norm_rate = c.decay_rate / 2.0;
    c.overshoot = std::sqrt(c.lambda_max / c.lambda_min);
    return c;
}

}  // namespace kinbc
