#pragma once

#include <optional>

#include <Eigen/Dense>

#include "kinbc/boundary.hpp"
#include "kinbc/grid.hpp"
#include "kinbc/model.hpp"
#include "kinbc/stability.hpp"

namespace kinbc {

/// Decay constants of the weighted energy estimate.
///   lambda: smallest dissipation eigenvalue (NaN when r = 0)
///   c1:     min over the sample set of lambda_min(P^{-T} (sum_j Lambda_j^2) E(x) P^{-1})
///   c2:     max over the sample set of 2 ||mu12 Lambda||^2 / c1 + ||mu22 Lambda + Lambda mu22||
/// with E(x) = exp(-sum_j Lambda_j x_j) and mu(x) = P^{-T} E(x) P^{-1} split at n - r.
struct LyapunovConstants {
    double lambda = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    int rank = 0;
};

struct LyapunovCertificate {
    double alpha = 0.0;
    double lambda_small = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    /// Extremal eigenvalues of alpha Lambda0 + E(x) over the closed box.
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    /// Coercivity of P: |P f|^2 >= coercivity |f|^2.
    double coercivity = 0.0;
    /// Dissipation constant C~ multiplying ||f||^2.
    double c_tilde = 0.0;
    /// dL/dt <= -decay_rate L when the boundary form is nonnegative.
    double decay_rate = 0.0;
    /// ||f(t)|| <= overshoot exp(-norm_rate t) ||f0||.
    double norm_rate = 0.0;
    double overshoot = 0.0;
    int rank = 0;
    bool valid = false;
};

inline constexpr double kAlphaFloor = 1e-6;
inline constexpr double kDefaultAlphaMargin = 0.1;
inline constexpr int kDefaultSamplesPerAxis = 8;

/// diag(alpha / f_i^e + exp(-u_i . x)).
DiagonalXd weight_matrix(const DiscreteVelocityModel& model, const SteadyState& fe, double alpha,
                         const Eigen::Ref<const Eigen::VectorXd>& x);

/// Weight diagonal at every grid node (n_species x nodes).
Eigen::MatrixXd node_weights(const Grid& grid, const BoundaryWeights& weights);

/// Trapezoid quadrature of sum_i W_i(x) f_i(x)^2 with W from `node_weights`.
double weighted_energy(const Field& field, const Grid& grid, const Eigen::MatrixXd& weights);

/// L(t) = alpha int f^T Lambda0 f + int f^T E(x) f.
double functional(const Field& field, const Grid& grid, const DiscreteVelocityModel& model, const SteadyState& fe,
                  double alpha);

/// Box corners plus a `per_axis`-point lattice on every axis.
std::vector<Eigen::VectorXd> sample_points(const BoxDomain& domain, int per_axis);

LyapunovConstants constants(const DiscreteVelocityModel& model, const SteadyState& fe, const BoxDomain& domain,
                            const StabilityDecomposition& decomposition, int samples_per_axis = kDefaultSamplesPerAxis);

/// alpha = max(kAlphaFloor, (c2 - c1) / (2 lambda)) (1 + margin). Throws
/// ParameterError when lambda <= 0 (use the exp-only functional instead).
double select_alpha(double lambda, double c1, double c2, double margin = kDefaultAlphaMargin);

/// Extrema of the weight eigenvalues over the sample set.
std::pair<double, double> weight_extrema(const DiscreteVelocityModel& model, const SteadyState& fe, double alpha,
                                         const BoxDomain& domain, int samples_per_axis = kDefaultSamplesPerAxis);

/// Assemble the certificate. `alpha` empty selects it automatically; it is
/// forced to zero when r = 0.
LyapunovCertificate certify(const DiscreteVelocityModel& model, const SteadyState& fe, const BoxDomain& domain,
                            const StabilityDecomposition& decomposition, std::optional<double> alpha = std::nullopt,
                            double margin = kDefaultAlphaMargin, int samples_per_axis = kDefaultSamplesPerAxis);

}  // namespace kinbc
