#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "kinbc/grid.hpp"
#include "kinbc/model.hpp"

namespace kinbc {

/// Field layout shared by the solver and boundary code: one row per
/// species, one column per grid node.
using Field = Eigen::MatrixXd;

enum class Direction { incoming, outgoing, characteristic };

const char* to_string(Direction d) noexcept;

/// Per-face, per-species sign of the normal speed s_i = n . u_i. On a box the
/// label is constant over each face.
class BoundaryClassification {
public:
    BoundaryClassification(const DiscreteVelocityModel& model, const BoxDomain& domain);

    int face_count() const noexcept { return static_cast<int>(speed_.rows()); }
    int n_species() const noexcept { return static_cast<int>(speed_.cols()); }
    double normal_speed(int face, int species) const { return speed_(face, species); }
    Direction label(int face, int species) const;
    std::vector<int> species_with(int face, Direction d) const;
    std::vector<int> faces_with(int species, Direction d) const;

private:
    Eigen::MatrixXd speed_;  // faces x species
};

BoundaryClassification classify(const DiscreteVelocityModel& model, const BoxDomain& domain);

/// Diagonal weight w_i(x) of the boundary quadratic form. The Lyapunov weight
/// is alpha / f_i^e + exp(-u_i . x); the unit weight is 1 for every species.
class BoundaryWeights {
public:
    static BoundaryWeights lyapunov(const DiscreteVelocityModel& model, const SteadyState& fe, double alpha);
    static BoundaryWeights unit(int n_species);

    double operator()(int species, const Eigen::Ref<const Eigen::VectorXd>& x) const;
    Eigen::VectorXd diagonal(const Eigen::Ref<const Eigen::VectorXd>& x) const;

private:
    Eigen::VectorXd constant_;
    std::optional<Eigen::MatrixXd> velocities_;
};

/// Tangential coordinate map y = scale .* x + offset from a target face to a
/// source face (both in ascending tangential-axis order).
struct AffineFaceMap {
    Eigen::VectorXd scale;
    Eigen::VectorXd offset;

    Eigen::VectorXd operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const {
        return scale.cwiseProduct(x) + offset;
    }
    double jacobian() const { return scale.size() ? scale.prod() : 1.0; }
    static AffineFaceMap identity(int tangential_dim);
};

struct FeedbackTerm {
    int source_face = 0;
    int source_species = 0;
    AffineFaceMap map;
    double gain = 0.0;
};

/// Incoming value of `species` on `face`, inside the tangential box
/// [active_lower, active_upper], is the sum of gain * (source trace at map(x)).
struct FeedbackRule {
    int face = 0;
    int species = 0;
    Eigen::VectorXd active_lower;
    Eigen::VectorXd active_upper;
    std::vector<FeedbackTerm> terms;
};

/// Assignment of every incoming trace from outgoing traces. Incoming traces
/// not covered by a rule are held at zero.
class ControlLaw {
public:
    ControlLaw() = default;
    ControlLaw(std::string name, std::vector<FeedbackRule> rules)
        : name_(std::move(name)), rules_(std::move(rules)) {}

    const std::string& name() const noexcept { return name_; }
    const std::vector<FeedbackRule>& rules() const noexcept { return rules_; }

    /// Throws LawError when a target is not incoming, a source is not
    /// outgoing, or a map leaves the source face.
    void validate(const DiscreteVelocityModel& model, const BoxDomain& domain) const;

private:
    std::string name_ = "zero";
    std::vector<FeedbackRule> rules_;
};

/// Unit-square coplanar laws. All incoming traces are zero except f3 on the
/// bottom edge inside `interval`, where
///   nonlocal: f3(x, 0) = k1 f2(0, 3x - 1)
///   mixed:    f3(x, 0) = k2 f2(0, 3x - 1) + k3 f4(x, 0).
/// The left-edge map sends `interval` onto [0, 1] affinely.
ControlLaw coplanar_zero_law();
ControlLaw coplanar_nonlocal_law(double k1, std::pair<double, double> interval = {1.0 / 3.0, 2.0 / 3.0});
ControlLaw coplanar_mixed_law(double k2, double k3, std::pair<double, double> interval = {1.0 / 3.0, 2.0 / 3.0});

/// Closed-form gain limits for the coplanar laws under Lyapunov weights.
double gain_bound_nonlocal(const Eigen::Ref<const Eigen::VectorXd>& fe, double alpha);
std::pair<double, double> gain_bounds_mixed(const Eigen::Ref<const Eigen::VectorXd>& fe, double alpha);

struct Admissibility {
    bool admissible = true;
    /// Smallest pointwise slack (outgoing budget minus received feedback).
    double margin = 0.0;
    /// Description of the tightest budget; names the violated one when inadmissible.
    std::string tightest;
};

struct AdmissibilityOptions {
    int samples_per_axis = 129;
};

/// Trace-independent sufficient condition for a nonnegative boundary form:
/// at every sampled source point y, the outgoing budget w_m(y) |s_m| must cover
///   sum over terms reading (face, m) at y of  M g^2 w_i(x) |s_i| / |det map|,
/// with M the number of terms combined into the same incoming value.
Admissibility check_admissible(const ControlLaw& law, const DiscreteVelocityModel& model,
                               const BoxDomain& domain, const BoundaryWeights& weights,
                               const AdmissibilityOptions& opts = {});

Admissibility check_admissible(const ControlLaw& law, const DiscreteVelocityModel& model,
                               const BoxDomain& domain, const SteadyState& fe, double alpha,
                               const AdmissibilityOptions& opts = {});

/// Per-face boundary samples: traces[f] is n_species x face-node count.
using BoundaryTraces = std::vector<Eigen::MatrixXd>;

BoundaryTraces extract_traces(const Field& field, const Grid& grid);

/// Trapezoid quadrature of sum_i w_i(x) s_i f_i^2 over every face. Throws
/// DomainError on mismatched trace sizes.
double boundary_form(const BoundaryTraces& traces, const Grid& grid, const DiscreteVelocityModel& model,
                     const BoundaryWeights& weights);

inline double boundary_form(const BoundaryTraces& traces, const Grid& grid, const DiscreteVelocityModel& model,
                            const SteadyState& fe, double alpha) {
    return boundary_form(traces, grid, model, BoundaryWeights::lyapunov(model, fe, alpha));
}

/// A control law resolved onto grid nodes: each incoming boundary node value
/// becomes a fixed linear combination of outgoing node values.
class CompiledLaw {
public:
    CompiledLaw(const ControlLaw& law, const DiscreteVelocityModel& model, const Grid& grid);

    /// Overwrites every incoming boundary node of `field` from its outgoing
    /// nodes. All new values are computed before any is written.
    void apply(Field& field) const;

    /// Same, on face traces (incoming entries rewritten from outgoing ones).
    void apply(BoundaryTraces& traces) const;

private:
    struct Source {
        int species;
        Eigen::Index node;
        int face;
        Eigen::Index face_slot;
        double coefficient;
    };
    struct Assignment {
        int species;
        Eigen::Index node;
        int face;
        Eigen::Index face_slot;
        std::vector<Source> sources;
    };
    std::vector<Assignment> assignments_;
};

}  // namespace kinbc
