#include "kinbc/model.hpp"

#include <algorithm>
#include <sstream>
#include <utility>

namespace kinbc {

namespace {

std::array<int, 2> sorted_pair(int a, int b) { return a <= b ? std::array{a, b} : std::array{b, a}; }

int ordered_count(const std::array<int, 2>& p) { return p[0] == p[1] ? 1 : 2; }

std::vector<std::array<int, 2>> orderings(const std::array<int, 2>& p) {
    if (p[0] == p[1]) return {p};
    return {p, {p[1], p[0]}};
}

Eigen::VectorXd channel_direction(const CollisionChannel& c, int n) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    v[c.first[0]] += 1.0;
    v[c.first[1]] += 1.0;
    v[c.second[0]] -= 1.0;
    v[c.second[1]] -= 1.0;
    return v;
}

}  // namespace

DiscreteVelocityModel::DiscreteVelocityModel(Eigen::MatrixXd velocities,
                                             const std::vector<Collision>& collisions)
    : velocities_(std::move(velocities)) {
    const int n = n_species();
    if (n < 1 || dim() < 1) throw ModelError("model needs at least one species and one dimension");
    if (!velocities_.allFinite()) throw ModelError("velocities must be finite");
    for (int k = 0; k < n; ++k) {
        if (velocities_.row(k).isZero(0.0)) {
            std::ostringstream os;
            os << "velocity " << k + 1
               << " is the zero vector; the velocity set must not contain the origin";
            throw ModelError(os.str());
        }
    }

    std::map<std::pair<std::array<int, 2>, std::array<int, 2>>, double> merged;
    for (const auto& c : collisions) {
        for (int idx : {c.i, c.j, c.k, c.l}) {
            if (idx < 0 || idx >= n) {
                std::ostringstream os;
                os << "collision index " << idx + 1 << " outside 1.." << n;
                throw ModelError(os.str());
            }
        }
        if (!std::isfinite(c.rate) || c.rate < 0.0)
            throw ParameterError("collision rates must be finite and nonnegative");
        auto p = sorted_pair(c.i, c.j);
        auto q = sorted_pair(c.k, c.l);
        // an elastic self-channel moves nothing
        if (p == q || c.rate == 0.0) continue;
        if (q < p) std::swap(p, q);
        merged[{p, q}] += c.rate;
    }

    for (const auto& [pairs, rate] : merged) {
        channels_.push_back({pairs.first, pairs.second, rate});
        // Each closed entry carries rate * 2 / (m_ab m_cd), m = number of
        // distinct orderings of a pair. The quadruple sum then collapses to
        // the channel form with exactly `rate`.
        const double value = rate * 2.0 / (ordered_count(pairs.first) * ordered_count(pairs.second));
        for (const auto& lo : orderings(pairs.first))
            for (const auto& up : orderings(pairs.second)) {
                tensor_[{lo[0], lo[1], up[0], up[1]}] = value;
                tensor_[{up[0], up[1], lo[0], lo[1]}] = value;
            }
    }
}

Eigen::DiagonalMatrix<double, Eigen::Dynamic> DiscreteVelocityModel::transport_matrix(int axis) const {
    return Eigen::DiagonalMatrix<double, Eigen::Dynamic>(velocities_.col(axis));
}

SteadyState::SteadyState(const DiscreteVelocityModel& model, Eigen::VectorXd values, double tol)
    : values_(std::move(values)) {
    if (values_.size() != model.n_species())
        throw ModelError("steady state length does not match the number of species");
    require_positive(values_, "steady state");
    const double residual = source_term(model, values_).lpNorm<Eigen::Infinity>();
    if (!(residual <= tol)) {
        std::ostringstream os;
        os.precision(6);
        os << "not a steady state: Q(f_e) residual " << residual << " exceeds tolerance " << tol;
        throw ModelError(os.str());
    }
}

DiscreteVelocityModel build_coplanar(double speed, double sigma) {
    if (!(speed > 0.0) || !std::isfinite(speed)) throw ParameterError("coplanar speed U must be positive");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ParameterError("coplanar rate sigma must be nonnegative");
    Eigen::MatrixXd u(4, 2);
    u << speed, 0.0, -speed, 0.0, 0.0, speed, 0.0, -speed;
    return DiscreteVelocityModel(std::move(u), {{0, 1, 2, 3, sigma}});
}

void require_positive(const Eigen::Ref<const Eigen::VectorXd>& f, const char* what) {
    for (Eigen::Index k = 0; k < f.size(); ++k) {
        if (!(f[k] > 0.0) || !std::isfinite(f[k])) {
            std::ostringstream os;
            os << what << ": component " << k + 1 << " = " << f[k] << " is not strictly positive";
            throw DomainError(os.str());
        }
    }
}

Eigen::VectorXd source_term(const DiscreteVelocityModel& model, const Eigen::Ref<const Eigen::VectorXd>& f) {
    if (f.size() != model.n_species()) throw DomainError("source_term: state length mismatch");
    require_positive(f, "source_term");
    Eigen::VectorXd q = Eigen::VectorXd::Zero(f.size());
    // Entry A_{ij}^{kl}: gain for k from (i,j), loss for i from (i,j) -> (k,l)
    // read as A_{kl}^{ij} with the roles swapped.
    for (const auto& [key, a] : model.rate_tensor()) {
        const auto [i, j, k, l] = key;
        q[k] += a * f[i] * f[j];
        q[i] -= a * f[i] * f[j];
    }
    return q;
}

Eigen::MatrixXd source_jacobian(const DiscreteVelocityModel& model, const Eigen::Ref<const Eigen::VectorXd>& f) {
    if (f.size() != model.n_species()) throw DomainError("source_jacobian: state length mismatch");
    const auto n = f.size();
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [key, a] : model.rate_tensor()) {
        const auto [i, j, k, l] = key;
        // d(f_i f_j) = f_j e_i + f_i e_j
        jac(k, i) += a * f[j];
        jac(k, j) += a * f[i];
        jac(i, i) -= a * f[j];
        jac(i, j) -= a * f[i];
    }
    return jac;
}

Eigen::MatrixXd onsager_matrix(const DiscreteVelocityModel& model, const Eigen::Ref<const Eigen::VectorXd>& f) {
    if (f.size() != model.n_species()) throw DomainError("onsager_matrix: state length mismatch");
    require_positive(f, "onsager_matrix");
    const int n = model.n_species();
    Eigen::MatrixXd lmat = Eigen::MatrixXd::Zero(n, n);
    for (const auto& c : model.channels()) {
        const double ab = f[c.first[0]] * f[c.first[1]];
        const double cd = f[c.second[0]] * f[c.second[1]];
        const Eigen::VectorXd v = channel_direction(c, n);
        lmat.noalias() += c.rate * log_mean(ab, cd) * v * v.transpose();
    }
    return lmat;
}

bool is_steady_state(const DiscreteVelocityModel& model, const Eigen::Ref<const Eigen::VectorXd>& f, double tol) {
    if (f.size() != model.n_species() || !f.allFinite() || (f.array() <= 0.0).any()) return false;
    return source_term(model, f).lpNorm<Eigen::Infinity>() <= tol;
}

}  // namespace kinbc
