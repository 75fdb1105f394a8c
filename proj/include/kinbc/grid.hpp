#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "kinbc/error.hpp"

namespace kinbc {

/// Axis-aligned face of a box: the set x_axis = lower (side 0, normal -e_axis)
/// or x_axis = upper (side 1, normal +e_axis). Faces are indexed 2 * axis + side.
struct Face {
    int axis = 0;
    int side = 0;

    int index() const noexcept { return 2 * axis + side; }
    double normal_sign() const noexcept { return side == 0 ? -1.0 : 1.0; }
    static Face from_index(int f) { return {f / 2, f % 2}; }
    bool operator==(const Face&) const = default;
};

class BoxDomain {
public:
    /// Throws DomainError unless lower < upper componentwise.
    BoxDomain(Eigen::VectorXd lower, Eigen::VectorXd upper);

    static BoxDomain unit(int dim);

    int dim() const noexcept { return static_cast<int>(lower_.size()); }
    int face_count() const noexcept { return 2 * dim(); }
    const Eigen::VectorXd& lower() const noexcept { return lower_; }
    const Eigen::VectorXd& upper() const noexcept { return upper_; }
    double extent(int axis) const { return upper_[axis] - lower_[axis]; }
    Eigen::VectorXd normal(const Face& face) const;
    bool contains(const Eigen::Ref<const Eigen::VectorXd>& x, double tol = 0.0) const;
    /// Tangential axes of a face in ascending order.
    std::vector<int> tangential_axes(const Face& face) const;

private:
    Eigen::VectorXd lower_;
    Eigen::VectorXd upper_;
};

/// Nodes of the volume grid lying on one face, first tangential axis fastest.
struct FaceGrid {
    Face face;
    std::vector<int> tangential_axes;
    std::vector<int> extents;
    std::vector<Eigen::Index> nodes;
    /// Tensor trapezoid weights on the face (a single unit weight when d = 1).
    Eigen::VectorXd weights;

    Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(nodes.size()); }
};

/// Node-based tensor grid including boundary nodes; node index has axis 0
/// fastest.
class Grid {
public:
    /// Throws DomainError when fewer than 2 cells are requested on an axis.
    Grid(BoxDomain domain, std::vector<int> cells);

    int dim() const noexcept { return domain_.dim(); }
    const BoxDomain& domain() const noexcept { return domain_; }
    int cells(int axis) const { return cells_[static_cast<std::size_t>(axis)]; }
    int nodes(int axis) const { return cells(axis) + 1; }
    double spacing(int axis) const { return spacing_[axis]; }
    const Eigen::VectorXd& spacings() const noexcept { return spacing_; }
    Eigen::Index node_count() const noexcept { return node_count_; }
    Eigen::Index stride(int axis) const { return strides_[static_cast<std::size_t>(axis)]; }
    int index_along(Eigen::Index node, int axis) const {
        return static_cast<int>((node / strides_[static_cast<std::size_t>(axis)]) % nodes(axis));
    }
    double coordinate(int axis, int i) const;
    Eigen::VectorXd position(Eigen::Index node) const;

    /// Tensor trapezoid weights over the volume nodes.
    const Eigen::VectorXd& quadrature_weights() const noexcept { return volume_weights_; }
    const FaceGrid& face(int f) const { return faces_[static_cast<std::size_t>(f)]; }
    const std::vector<FaceGrid>& faces() const noexcept { return faces_; }

private:
    BoxDomain domain_;
    std::vector<int> cells_;
    Eigen::VectorXd spacing_;
    std::vector<Eigen::Index> strides_;
    Eigen::Index node_count_ = 0;
    Eigen::VectorXd volume_weights_;
    std::vector<FaceGrid> faces_;
};

/// Composite trapezoid weights for `cells` equal intervals of width h.
Eigen::VectorXd trapezoid_weights(int cells, double h);

/// Recursive pairwise summation with a fixed split, so the result depends
/// only on the term sequence.
double pairwise_sum(std::span<const double> terms);

}  // namespace kinbc
