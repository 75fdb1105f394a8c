#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Jacobi>

#include "kinbc/error.hpp"

namespace kinbc {

/// Eigenpairs of a real symmetric matrix: m = vectors * diag(values) * vectors^T,
/// values ascending, columns of `vectors` orthonormal.
template <typename Scalar>
struct SymmetricEigen {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> vectors;
    int sweeps = 0;
};

struct JacobiOptions {
    double off_tolerance = 1e-14;  // relative to ||m||_F
    int max_sweeps = 100;
    double symmetry_tolerance = 1e-12;
};

/// Cyclic Jacobi rotations. Throws NumericalError on asymmetric input or
/// when the sweep limit is reached.
template <typename Derived>
SymmetricEigen<typename Derived::Scalar> eigh_symmetric(const Eigen::MatrixBase<Derived>& m,
                                                        const JacobiOptions& opts = {}) {
    using Scalar = typename Derived::Scalar;
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using std::abs;
    using std::sqrt;

    if (m.rows() != m.cols()) throw NumericalError("eigh_symmetric: matrix is not square");
    const Eigen::Index n = m.rows();
    Mat a = m;
    const Scalar scale = a.norm();
    if (!a.allFinite()) throw NumericalError("eigh_symmetric: non-finite entry");
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > Scalar(opts.symmetry_tolerance) * std::max(Scalar(1), scale))
        throw NumericalError("eigh_symmetric: matrix is not symmetric");
    a = (a + a.transpose()) / Scalar(2);

    Mat v = Mat::Identity(n, n);
    auto off_norm = [&a, n] {
        Scalar s(0);
        for (Eigen::Index q = 1; q < n; ++q)
            for (Eigen::Index p = 0; p < q; ++p) s += Scalar(2) * a(p, q) * a(p, q);
        return sqrt(s);
    };

    int sweep = 0;
    for (;; ++sweep) {
        const Scalar off = off_norm();
        if (off == Scalar(0) || off <= Scalar(opts.off_tolerance) * scale) break;
        if (sweep == opts.max_sweeps) throw NumericalError("eigh_symmetric: Jacobi sweep limit reached");
        for (Eigen::Index p = 0; p < n - 1; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                if (a(p, q) == Scalar(0)) continue;
                Eigen::JacobiRotation<Scalar> rot;
                rot.makeJacobi(a, p, q);
                a.applyOnTheLeft(p, q, rot.adjoint());
                a.applyOnTheRight(p, q, rot);
                a(p, q) = a(q, p) = Scalar(0);
                v.applyOnTheRight(p, q, rot);
            }
        }
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index(0));
    std::stable_sort(order.begin(), order.end(),
                     [&a](Eigen::Index x, Eigen::Index y) { return a(x, x) < a(y, y); });

    SymmetricEigen<Scalar> out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    out.sweeps = sweep;
    for (Eigen::Index c = 0; c < n; ++c) {
        const Eigen::Index src = order[static_cast<std::size_t>(c)];
        out.values[c] = a(src, src);
        auto col = v.col(src);
        Eigen::Index pivot;
        col.cwiseAbs().maxCoeff(&pivot);
        // fixed sign so repeated runs agree bit for bit
        out.vectors.col(c) = col(pivot) < Scalar(0) ? (-col).eval() : col.eval();
    }
    return out;
}

}  // namespace kinbc
