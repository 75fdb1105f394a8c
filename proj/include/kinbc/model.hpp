#pragma once

#include <array>
#include <cmath>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "kinbc/error.hpp"

namespace kinbc {

/// One binary collision channel {a,b} <-> {c,d} with a nonnegative rate.
/// Species indices are zero-based. The source contribution of a channel is
/// rate * (f_c f_d - f_a f_b) * (e_a + e_b - e_c - e_d).
struct CollisionChannel {
    std::array<int, 2> first;
    std::array<int, 2> second;
    double rate = 0.0;

    bool operator==(const CollisionChannel&) const = default;
};

/// Coefficient A_{ij}^{kl} of the quadruple-index collision sum, keyed as
/// {i, j, k, l} (lower pair first).
using RateTensor = std::map<std::array<int, 4>, double>;

/// Discrete-velocity kinetic model: n velocities in R^d and a family of
/// binary collision channels closed under the pair-exchange symmetries.
class DiscreteVelocityModel {
public:
    /// `velocities` is n x d, row k holding u_k. Each collision entry is
    /// stated once as {i, j, k, l, rate}; duplicates of the same unordered
    /// channel accumulate. Throws ModelError when a velocity is zero or an
    /// index is out of range, ParameterError on a negative/non-finite rate.
    struct Collision {
        int i, j, k, l;
        double rate;
    };

    DiscreteVelocityModel(Eigen::MatrixXd velocities, const std::vector<Collision>& collisions);

    int dim() const noexcept { return static_cast<int>(velocities_.cols()); }
    int n_species() const noexcept { return static_cast<int>(velocities_.rows()); }

    const Eigen::MatrixXd& velocities() const noexcept { return velocities_; }
    Eigen::VectorXd velocity(int k) const { return velocities_.row(k).transpose(); }

    /// Diagonal transport matrix diag(u_{1j}, ..., u_{nj}) for axis j.
    Eigen::DiagonalMatrix<double, Eigen::Dynamic> transport_matrix(int axis) const;

    /// Canonical channels: pairs sorted, lexicographically smaller pair first.
    const std::vector<CollisionChannel>& channels() const noexcept { return channels_; }

    /// Full coefficient family closed under A_{ij}^{kl} = A_{kl}^{ij} = A_{lk}^{ij}.
    /// Values are scaled so that the quadruple sum reproduces the channel
    /// form exactly (see source_term).
    const RateTensor& rate_tensor() const noexcept { return tensor_; }

private:
    Eigen::MatrixXd velocities_;
    std::vector<CollisionChannel> channels_;
    RateTensor tensor_;
};

/// Spatially uniform positive state with vanishing collision source.
class SteadyState {
public:
    static constexpr double kDefaultTolerance = 1e-10;

    /// Throws DomainError on non-positive entries and ModelError when
    /// ||Q(values)||_inf exceeds `tol`.
    SteadyState(const DiscreteVelocityModel& model, Eigen::VectorXd values,
                double tol = kDefaultTolerance);

    const Eigen::VectorXd& values() const noexcept { return values_; }
    double operator[](int k) const { return values_[k]; }
    int size() const noexcept { return static_cast<int>(values_.size()); }

private:
    Eigen::VectorXd values_;
};

/// Two-dimensional four-velocity model with speeds (+-U, 0), (0, +-U) and one
/// collision channel {1,2} <-> {3,4} at rate sigma (sigma = 0: collisionless).
DiscreteVelocityModel build_coplanar(double speed, double sigma);

/// Throws DomainError unless every entry is strictly positive and finite.
void require_positive(const Eigen::Ref<const Eigen::VectorXd>& f, const char* what);

/// Q_k(f) = sum_{ijl} (A_{ij}^{kl} f_i f_j - A_{kl}^{ij} f_k f_l).
Eigen::VectorXd source_term(const DiscreteVelocityModel& model,
                            const Eigen::Ref<const Eigen::VectorXd>& f);

/// Analytic Jacobian of the quadratic collision form.
Eigen::MatrixXd source_jacobian(const DiscreteVelocityModel& model,
                                const Eigen::Ref<const Eigen::VectorXd>& f);

inline Eigen::MatrixXd source_jacobian(const DiscreteVelocityModel& model, const SteadyState& fe) {
    return source_jacobian(model, fe.values());
}

/// Logarithmic mean (a - b) / (log a - log b), falling back to the
/// arithmetic mean when |a - b| < 1e-12 max(a, b).
template <typename Scalar>
Scalar log_mean(Scalar a, Scalar b) {
    using std::abs;
    using std::log;
    using std::max;
    if (abs(a - b) < Scalar(1e-12) * max(a, b)) return (a + b) / Scalar(2);
    return (a - b) / (log(a) - log(b));
}

/// Symmetric positive semi-definite L(f) with Q(f) = -L(f) log f.
Eigen::MatrixXd onsager_matrix(const DiscreteVelocityModel& model,
                               const Eigen::Ref<const Eigen::VectorXd>& f);

namespace detail {
template <typename Derived>
void require_positive_state(const Eigen::MatrixBase<Derived>& f) {
    using Scalar = typename Derived::Scalar;
    if (!f.allFinite() || (f.array() <= Scalar(0)).any())
        throw DomainError("entropy: state must have strictly positive finite components");
}
}  // namespace detail

/// eta(f) = sum f_k (log f_k - 1).
template <typename Derived>
typename Derived::Scalar entropy(const Eigen::MatrixBase<Derived>& f) {
    using Scalar = typename Derived::Scalar;
    detail::require_positive_state(f);
    return (f.array() * (f.array().log() - Scalar(1))).sum();
}

template <typename Derived>
auto entropy_gradient(const Eigen::MatrixBase<Derived>& f) {
    detail::require_positive_state(f);
    return f.array().log().matrix().eval();
}

template <typename Derived>
auto entropy_hessian(const Eigen::MatrixBase<Derived>& f) {
    detail::require_positive_state(f);
    return Eigen::DiagonalMatrix<typename Derived::Scalar, Eigen::Dynamic>(
        f.array().inverse().matrix().eval());
}

/// True iff ||Q(f)||_inf <= tol.
bool is_steady_state(const DiscreteVelocityModel& model,
                     const Eigen::Ref<const Eigen::VectorXd>& f, double tol);

}  // namespace kinbc
