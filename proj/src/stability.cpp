#include "kinbc/stability.hpp"

#include <algorithm>
#include <sstream>

namespace kinbc {

Eigen::MatrixXd StabilityDecomposition::dissipation_block() const {
    const int size = n();
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(size, size);
    b.bottomRightCorner(rank, rank).diagonal() = lambda;
    return b;
}

DiagonalXd lambda0(const Eigen::Ref<const Eigen::VectorXd>& fe) {
    require_positive(fe, "lambda0");
    return DiagonalXd(fe.cwiseInverse());
}

double zero_eigenvalue_threshold(const Eigen::Ref<const Eigen::VectorXd>& spectrum) {
    const double largest = spectrum.size() ? spectrum.maxCoeff() : 0.0;
    return std::max(1e-9 * largest, 1e-14);
}

StabilityDecomposition decompose(const DiscreteVelocityModel& model, const SteadyState& fe) {
    const int n = model.n_species();
    const Eigen::VectorXd sqrt_l0 = fe.values().cwiseInverse().cwiseSqrt();
    const Eigen::MatrixXd lmat = onsager_matrix(model, fe.values());
    const Eigen::MatrixXd sym = sqrt_l0.asDiagonal() * lmat * sqrt_l0.asDiagonal();

    const auto eig = eigh_symmetric(sym);
    const double largest = eig.values.size() ? eig.values.maxCoeff() : 0.0;
    if (eig.values.size() && eig.values.minCoeff() < -1e-12 * std::max(1.0, largest)) {
        std::ostringstream os;
        os << "Onsager matrix is not positive semi-definite (eigenvalue " << eig.values.minCoeff() << ")";
        throw ModelError(os.str());
    }

    const double cut = zero_eigenvalue_threshold(eig.values);
    int zeros = 0;
    while (zeros < n && eig.values[zeros] <= cut) ++zeros;

    StabilityDecomposition d;
    d.rank = n - zeros;
    d.spectrum = eig.values;
    d.lambda = eig.values.tail(d.rank);
    d.lambda0 = lambda0(fe.values());
    // P = H Lambda0^{1/2} with H the transposed eigenvector matrix
    const Eigen::MatrixXd h = eig.vectors.transpose();
    d.p = h * sqrt_l0.asDiagonal();
    d.p_inv = sqrt_l0.cwiseInverse().asDiagonal() * h.transpose();
    return d;
}

StructuralResiduals structural_residuals(const StabilityDecomposition& d, const Eigen::Ref<const Eigen::MatrixXd>& jacobian) {
    const Eigen::MatrixXd block = d.dissipation_block();
    StructuralResiduals r{};
    r.similarity = (d.p * jacobian * d.p_inv + block).cwiseAbs().maxCoeff();
    r.symmetrizer = (d.lambda0 * jacobian + d.p.transpose() * block * d.p).cwiseAbs().maxCoeff();
    return r;
}

}  // namespace kinbc
