#pragma once

#include <Eigen/Dense>

#include "kinbc/eigh.hpp"
#include "kinbc/model.hpp"

namespace kinbc {

using DiagonalXd = Eigen::DiagonalMatrix<double, Eigen::Dynamic>;

/// Structural-stability certificate at a steady state f_e:
///   P J P^{-1} = -blockdiag(0, Lambda),  Lambda0 J = -P^T blockdiag(0, Lambda) P,
/// with J the source Jacobian and Lambda0 = diag(1 / f_e).
struct StabilityDecomposition {
    Eigen::MatrixXd p;
    Eigen::MatrixXd p_inv;
    DiagonalXd lambda0;
    /// Positive eigenvalues of Lambda0^{1/2} L(f_e) Lambda0^{1/2}, ascending.
    Eigen::VectorXd lambda;
    int rank = 0;
    /// Full ascending spectrum, zeros first.
    Eigen::VectorXd spectrum;

    int n() const noexcept { return static_cast<int>(p.rows()); }
    /// blockdiag(0_{n-r}, Lambda).
    Eigen::MatrixXd dissipation_block() const;
};

struct StructuralResiduals {
    double similarity;    // max |P J P^{-1} + blockdiag(0, Lambda)|
    double symmetrizer;   // max |Lambda0 J + P^T blockdiag(0, Lambda) P|
};

DiagonalXd lambda0(const Eigen::Ref<const Eigen::VectorXd>& fe);

/// Threshold separating numerically zero eigenvalues: max(1e-9 * largest, 1e-14).
double zero_eigenvalue_threshold(const Eigen::Ref<const Eigen::VectorXd>& spectrum);

/// Throws ModelError when L(f_e) has an eigenvalue below -1e-12 (scaled by
/// max(1, largest)), NumericalError when the eigensolver fails.
StabilityDecomposition decompose(const DiscreteVelocityModel& model, const SteadyState& fe);

StructuralResiduals structural_residuals(const StabilityDecomposition& d, const Eigen::Ref<const Eigen::MatrixXd>& jacobian);

}  // namespace kinbc
