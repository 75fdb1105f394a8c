#include "kinbc/grid.hpp"

#include <sstream>
#include <utility>

namespace kinbc {

BoxDomain::BoxDomain(Eigen::VectorXd lower, Eigen::VectorXd upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() == 0 || lower_.size() != upper_.size())
        throw DomainError("box bounds must be non-empty and of equal length");
    if (!lower_.allFinite() || !upper_.allFinite() || !(lower_.array() < upper_.array()).all())
        throw DomainError("box bounds must satisfy lower < upper on every axis");
}

BoxDomain BoxDomain::unit(int dim) {
    return BoxDomain(Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim));
}

Eigen::VectorXd BoxDomain::normal(const Face& face) const {
    Eigen::VectorXd n = Eigen::VectorXd::Zero(dim());
    n[face.axis] = face.normal_sign();
    return n;
}

bool BoxDomain::contains(const Eigen::Ref<const Eigen::VectorXd>& x, double tol) const {
    return x.size() == dim() && (x.array() >= lower_.array() - tol).all() &&
           (x.array() <= upper_.array() + tol).all();
}

std::vector<int> BoxDomain::tangential_axes(const Face& face) const {
    std::vector<int> axes;
    for (int j = 0; j < dim(); ++j)
        if (j != face.axis) axes.push_back(j);
    return axes;
}

Eigen::VectorXd trapezoid_weights(int cells, double h) {
    Eigen::VectorXd w = Eigen::VectorXd::Constant(cells + 1, h);
    w[0] = w[cells] = 0.5 * h;
    return w;
}

double pairwise_sum(std::span<const double> terms) {
    constexpr std::size_t kBlock = 32;
    if (terms.size() <= kBlock) {
        double s = 0.0;
        for (double t : terms) s += t;
        return s;
    }
    const std::size_t half = terms.size() / 2;
    return pairwise_sum(terms.first(half)) + pairwise_sum(terms.subspan(half));
}

Grid::Grid(BoxDomain domain, std::vector<int> cells) : domain_(std::move(domain)), cells_(std::move(cells)) {
    const int d = domain_.dim();
    if (static_cast<int>(cells_.size()) != d) throw DomainError("grid: one cell count per axis required");
    spacing_.resize(d);
    strides_.resize(static_cast<std::size_t>(d));
    node_count_ = 1;
    for (int j = 0; j < d; ++j) {
        if (cells_[static_cast<std::size_t>(j)] < 2) {
            std::ostringstream os;
            os << "grid: axis " << j << " needs at least 2 cells";
            throw DomainError(os.str());
        }
        spacing_[j] = domain_.extent(j) / cells_[static_cast<std::size_t>(j)];
        strides_[static_cast<std::size_t>(j)] = node_count_;
        node_count_ *= nodes(j);
    }

    std::vector<Eigen::VectorXd> axis_w;
    for (int j = 0; j < d; ++j) axis_w.push_back(trapezoid_weights(this->cells(j), spacing_[j]));

    volume_weights_.resize(node_count_);
    for (Eigen::Index p = 0; p < node_count_; ++p) {
        double w = 1.0;
        for (int j = 0; j < d; ++j) w *= axis_w[static_cast<std::size_t>(j)][index_along(p, j)];
        volume_weights_[p] = w;
    }

    for (int f = 0; f < domain_.face_count(); ++f) {
        FaceGrid fg;
        fg.face = Face::from_index(f);
        fg.tangential_axes = domain_.tangential_axes(fg.face);
        Eigen::Index count = 1;
        for (int a : fg.tangential_axes) {
            fg.extents.push_back(nodes(a));
            count *= nodes(a);
        }
        const Eigen::Index base =
            fg.face.side == 0 ? 0 : static_cast<Eigen::Index>(this->cells(fg.face.axis)) * stride(fg.face.axis);
        fg.nodes.reserve(static_cast<std::size_t>(count));
        fg.weights.resize(count);
        for (Eigen::Index t = 0; t < count; ++t) {
            Eigen::Index rem = t;
            Eigen::Index node = base;
            double w = 1.0;
            for (int a : fg.tangential_axes) {
                const int i = static_cast<int>(rem % nodes(a));
                rem /= nodes(a);
                node += i * stride(a);
                w *= axis_w[static_cast<std::size_t>(a)][i];
            }
            fg.nodes.push_back(node);
            fg.weights[t] = w;
        }
        faces_.push_back(std::move(fg));
    }
}

double Grid::coordinate(int axis, int i) const {
    if (i == cells(axis)) return domain_.upper()[axis];
    return domain_.lower()[axis] + i * spacing_[axis];
}

Eigen::VectorXd Grid::position(Eigen::Index node) const {
    Eigen::VectorXd x(dim());
    for (int j = 0; j < dim(); ++j) x[j] = coordinate(j, index_along(node, j));
    return x;
}

}  // namespace kinbc
