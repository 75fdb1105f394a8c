#include "kinbc/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace kinbc {

namespace {

constexpr double kCoordTol = 1e-12;

Eigen::VectorXd face_point(const BoxDomain& domain, const Face& face, const Eigen::Ref<const Eigen::VectorXd>& tangential) {
    Eigen::VectorXd x(domain.dim());
    x[face.axis] = face.side == 0 ? domain.lower()[face.axis] : domain.upper()[face.axis];
    const auto axes = domain.tangential_axes(face);
    for (std::size_t k = 0; k < axes.size(); ++k) x[axes[k]] = tangential[static_cast<Eigen::Index>(k)];
    return x;
}

Eigen::VectorXd face_lower(const BoxDomain& domain, const Face& face) {
    const auto axes = domain.tangential_axes(face);
    Eigen::VectorXd lo(static_cast<Eigen::Index>(axes.size()));
    for (std::size_t k = 0; k < axes.size(); ++k) lo[static_cast<Eigen::Index>(k)] = domain.lower()[axes[k]];
    return lo;
}

Eigen::VectorXd face_upper(const BoxDomain& domain, const Face& face) {
    const auto axes = domain.tangential_axes(face);
    Eigen::VectorXd hi(static_cast<Eigen::Index>(axes.size()));
    for (std::size_t k = 0; k < axes.size(); ++k) hi[static_cast<Eigen::Index>(k)] = domain.upper()[axes[k]];
    return hi;
}

bool inside(const Eigen::VectorXd& x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, double tol) {
    return (x.array() >= lo.array() - tol).all() && (x.array() <= hi.array() + tol).all();
}

/// Lattice of `per_axis` points per dimension spanning [lo, hi].
std::vector<Eigen::VectorXd> lattice(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, int per_axis) {
    const auto dims = lo.size();
    std::vector<Eigen::VectorXd> pts;
    Eigen::Index total = 1;
    for (Eigen::Index k = 0; k < dims; ++k) total *= per_axis;
    pts.reserve(static_cast<std::size_t>(total));
    for (Eigen::Index t = 0; t < total; ++t) {
        Eigen::VectorXd p(dims);
        Eigen::Index rem = t;
        for (Eigen::Index k = 0; k < dims; ++k) {
            const int i = static_cast<int>(rem % per_axis);
            rem /= per_axis;
            p[k] = i == per_axis - 1 ? hi[k] : lo[k] + (hi[k] - lo[k]) * i / (per_axis - 1);
        }
        pts.push_back(std::move(p));
    }
    return pts;
}

std::string axis_name(int axis) {
    static const char* names[] = {"x", "y", "z"};
    return axis < 3 ? names[axis] : "x" + std::to_string(axis + 1);
}

std::string describe(const Face& face, int species) {
    return "species " + std::to_string(species + 1) + " on face " + axis_name(face.axis) +
           (face.side == 0 ? "=lower" : "=upper");
}

std::string point_str(const Eigen::VectorXd& x) {
    std::ostringstream os;
    os << '(';
    for (Eigen::Index k = 0; k < x.size(); ++k) os << (k ? ", " : "") << x[k];
    os << ')';
    return os.str();
}

}  // namespace

const char* to_string(Direction d) noexcept {
    switch (d) {
        case Direction::incoming: return "incoming";
        case Direction::outgoing: return "outgoing";
        case Direction::characteristic: return "characteristic";
    }
    return "?";
}

BoundaryClassification::BoundaryClassification(const DiscreteVelocityModel& model, const BoxDomain& domain) {
    if (model.dim() != domain.dim()) throw DomainError("model and domain dimensions differ");
    speed_.resize(domain.face_count(), model.n_species());
    for (int f = 0; f < domain.face_count(); ++f) {
        const Face face = Face::from_index(f);
        for (int i = 0; i < model.n_species(); ++i)
            speed_(f, i) = face.normal_sign() * model.velocities()(i, face.axis);
    }
}

Direction BoundaryClassification::label(int face, int species) const {
    const double s = speed_(face, species);
    if (s > 0.0) return Direction::outgoing;
    if (s < 0.0) return Direction::incoming;
    return Direction::characteristic;
}

std::vector<int> BoundaryClassification::species_with(int face, Direction d) const {
    std::vector<int> out;
    for (int i = 0; i < n_species(); ++i)
        if (label(face, i) == d) out.push_back(i);
    return out;
}

std::vector<int> BoundaryClassification::faces_with(int species, Direction d) const {
    std::vector<int> out;
    for (int f = 0; f < face_count(); ++f)
        if (label(f, species) == d) out.push_back(f);
    return out;
}

BoundaryClassification classify(const DiscreteVelocityModel& model, const BoxDomain& domain) {
    return BoundaryClassification(model, domain);
}

BoundaryWeights BoundaryWeights::lyapunov(const DiscreteVelocityModel& model, const SteadyState& fe, double alpha) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ParameterError("alpha must be finite and nonnegative");
    BoundaryWeights w;
    w.constant_ = alpha * fe.values().cwiseInverse();
    w.velocities_ = model.velocities();
    return w;
}

BoundaryWeights BoundaryWeights::unit(int n_species) {
    BoundaryWeights w;
    w.constant_ = Eigen::VectorXd::Ones(n_species);
    return w;
}

double BoundaryWeights::operator()(int species, const Eigen::Ref<const Eigen::VectorXd>& x) const {
    double w = constant_[species];
    if (velocities_) w += std::exp(-velocities_->row(species).dot(x));
    return w;
}

Eigen::VectorXd BoundaryWeights::diagonal(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    Eigen::VectorXd w = constant_;
    if (velocities_) w += (-(*velocities_) * x).array().exp().matrix();
    return w;
}

AffineFaceMap AffineFaceMap::identity(int tangential_dim) {
    return {Eigen::VectorXd::Ones(tangential_dim), Eigen::VectorXd::Zero(tangential_dim)};
}

void ControlLaw::validate(const DiscreteVelocityModel& model, const BoxDomain& domain) const {
    const BoundaryClassification cls(model, domain);
    const Eigen::Index tdim = domain.dim() - 1;
    for (const auto& rule : rules_) {
        if (rule.face < 0 || rule.face >= domain.face_count()) throw LawError("feedback rule targets a missing face");
        if (rule.species < 0 || rule.species >= model.n_species()) throw LawError("feedback rule targets a missing species");
        const Face target = Face::from_index(rule.face);
        if (cls.label(rule.face, rule.species) != Direction::incoming)
            throw LawError(describe(target, rule.species) + " is " + to_string(cls.label(rule.face, rule.species)) +
                           ", not incoming; it cannot be assigned");
        if (rule.active_lower.size() != tdim || rule.active_upper.size() != tdim)
            throw LawError("active region dimension does not match the face");
        const Eigen::VectorXd flo = face_lower(domain, target);
        const Eigen::VectorXd fhi = face_upper(domain, target);
        if (!inside(rule.active_lower, flo, fhi, kCoordTol) || !inside(rule.active_upper, flo, fhi, kCoordTol) ||
            !(rule.active_lower.array() <= rule.active_upper.array()).all())
            throw LawError("active region of " + describe(target, rule.species) + " leaves the face");
        for (const auto& term : rule.terms) {
            if (term.source_face < 0 || term.source_face >= domain.face_count() || term.source_species < 0 ||
                term.source_species >= model.n_species())
                throw LawError("feedback term reads a missing face or species");
            const Face source = Face::from_index(term.source_face);
            if (cls.label(term.source_face, term.source_species) != Direction::outgoing)
                throw LawError(describe(source, term.source_species) + " is " +
                               to_string(cls.label(term.source_face, term.source_species)) +
                               ", not outgoing; it cannot be measured");
            if (term.map.scale.size() != tdim || term.map.offset.size() != tdim)
                throw LawError("coordinate map dimension does not match the face");
            if ((term.map.scale.array() == 0.0).any()) throw LawError("coordinate map must be invertible");
            if (!std::isfinite(term.gain)) throw LawError("feedback gains must be finite");
            const Eigen::VectorXd slo = face_lower(domain, source);
            const Eigen::VectorXd shi = face_upper(domain, source);
            for (const auto& corner : lattice(rule.active_lower, rule.active_upper, 2)) {
                if (!inside(term.map(corner), slo, shi, 1e-9))
                    throw LawError("coordinate map sends the active region of " + describe(target, rule.species) +
                                   " outside the source face");
            }
        }
    }
}

ControlLaw coplanar_zero_law() { return ControlLaw("zero", {}); }

namespace {

FeedbackRule coplanar_bottom_rule(std::pair<double, double> interval) {
    FeedbackRule rule;
    rule.face = Face{1, 0}.index();
    rule.species = 2;
    rule.active_lower = Eigen::VectorXd::Constant(1, interval.first);
    rule.active_upper = Eigen::VectorXd::Constant(1, interval.second);
    return rule;
}

FeedbackTerm left_edge_term(double gain, std::pair<double, double> interval) {
    const double width = interval.second - interval.first;
    if (!(width > 0.0)) throw LawError("feedback interval must have positive length");
    FeedbackTerm t;
    t.source_face = Face{0, 0}.index();
    t.source_species = 1;
    t.map.scale = Eigen::VectorXd::Constant(1, 1.0 / width);
    t.map.offset = Eigen::VectorXd::Constant(1, -interval.first / width);
    t.gain = gain;
    return t;
}

}  // namespace

ControlLaw coplanar_nonlocal_law(double k1, std::pair<double, double> interval) {
    FeedbackRule rule = coplanar_bottom_rule(interval);
    rule.terms.push_back(left_edge_term(k1, interval));
    return ControlLaw("nonlocal", {std::move(rule)});
}

ControlLaw coplanar_mixed_law(double k2, double k3, std::pair<double, double> interval) {
    FeedbackRule rule = coplanar_bottom_rule(interval);
    rule.terms.push_back(left_edge_term(k2, interval));
    FeedbackTerm local;
    local.source_face = Face{1, 0}.index();
    local.source_species = 3;
    local.map = AffineFaceMap::identity(1);
    local.gain = k3;
    rule.terms.push_back(std::move(local));
    return ControlLaw("mixed", {std::move(rule)});
}

namespace {
void require_coplanar_state(const Eigen::Ref<const Eigen::VectorXd>& fe, double alpha) {
    if (fe.size() != 4) throw ModelError("coplanar gain bounds need a four-component steady state");
    require_positive(fe, "coplanar steady state");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ParameterError("alpha must be nonnegative");
}
}  // namespace

double gain_bound_nonlocal(const Eigen::Ref<const Eigen::VectorXd>& fe, double alpha) {
    require_coplanar_state(fe, alpha);
    const double f2 = fe[1], f3 = fe[2];
    return std::sqrt(3.0 * f3 * (alpha + f2) / (f2 * (alpha + f3)));
}

std::pair<double, double> gain_bounds_mixed(const Eigen::Ref<const Eigen::VectorXd>& fe, double alpha) {
    require_coplanar_state(fe, alpha);
    const double f2 = fe[1], f3 = fe[2], f4 = fe[3];
    return {std::sqrt(3.0 * f3 * (alpha + f2) / (2.0 * f2 * (alpha + f3))),
            std::sqrt(f3 * (alpha + f4) / (2.0 * f4 * (alpha + f3)))};
}

Admissibility check_admissible(const ControlLaw& law, const DiscreteVelocityModel& model, const BoxDomain& domain,
                               const BoundaryWeights& weights, const AdmissibilityOptions& opts) {
    law.validate(model, domain);
    if (opts.samples_per_axis < 2) throw ParameterError("admissibility check needs at least 2 samples per axis");
    const BoundaryClassification cls(model, domain);

    Admissibility result;
    result.margin = std::numeric_limits<double>::infinity();

    for (int f = 0; f < domain.face_count(); ++f) {
        const Face face = Face::from_index(f);
        const Eigen::VectorXd flo = face_lower(domain, face);
        const Eigen::VectorXd fhi = face_upper(domain, face);
        for (int m : cls.species_with(f, Direction::outgoing)) {
            // (rule, term) pairs drawing on this outgoing trace
            std::vector<std::pair<const FeedbackRule*, const FeedbackTerm*>> readers;
            for (const auto& rule : law.rules())
                for (const auto& term : rule.terms)
                    if (term.source_face == f && term.source_species == m) readers.emplace_back(&rule, &term);

            std::vector<Eigen::VectorXd> samples = lattice(flo, fhi, opts.samples_per_axis);
            for (const auto& [rule, term] : readers)
                for (const auto& x : lattice(rule->active_lower, rule->active_upper, opts.samples_per_axis))
                    samples.push_back((term->map)(x));

            const double s_out = cls.normal_speed(f, m);
            for (const auto& y : samples) {
                const double budget = weights(m, face_point(domain, face, y)) * s_out;
                double demand = 0.0;
                for (const auto& [rule, term] : readers) {
                    const Eigen::VectorXd x = (y - term->map.offset).cwiseQuotient(term->map.scale);
                    if (!inside(x, rule->active_lower, rule->active_upper, kCoordTol)) continue;
                    const Face target = Face::from_index(rule->face);
                    const double s_in = std::abs(cls.normal_speed(rule->face, rule->species));
                    const double w_in = weights(rule->species, face_point(domain, target, x));
                    const auto combined = static_cast<double>(rule->terms.size());
                    demand += combined * term->gain * term->gain * w_in * s_in / std::abs(term->map.jacobian());
                }
                const double slack = budget - demand;
                if (slack < result.margin) {
                    result.margin = slack;
                    std::ostringstream os;
                    os.precision(10);
                    os << "outgoing budget of " << describe(face, m) << " at " << point_str(face_point(domain, face, y))
                       << ": budget " << budget << ", feedback demand " << demand;
                    result.tightest = os.str();
                }
            }
        }
    }
    if (!std::isfinite(result.margin)) {
        result.margin = 0.0;
        result.tightest = "no outgoing traces";
    }
    result.admissible = result.margin >= 0.0;
    return result;
}

Admissibility check_admissible(const ControlLaw& law, const DiscreteVelocityModel& model, const BoxDomain& domain,
                               const SteadyState& fe, double alpha, const AdmissibilityOptions& opts) {
    return check_admissible(law, model, domain, BoundaryWeights::lyapunov(model, fe, alpha), opts);
}

BoundaryTraces extract_traces(const Field& field, const Grid& grid) {
    BoundaryTraces traces;
    for (const auto& fg : grid.faces()) {
        Eigen::MatrixXd t(field.rows(), fg.size());
        for (Eigen::Index s = 0; s < fg.size(); ++s) t.col(s) = field.col(fg.nodes[static_cast<std::size_t>(s)]);
        traces.push_back(std::move(t));
    }
    return traces;
}

double boundary_form(const BoundaryTraces& traces, const Grid& grid, const DiscreteVelocityModel& model,
                     const BoundaryWeights& weights) {
    if (static_cast<int>(traces.size()) != grid.domain().face_count())
        throw DomainError("boundary_form: one trace block per face required");
    const BoundaryClassification cls(model, grid.domain());
    std::vector<double> terms;
    for (const auto& fg : grid.faces()) {
        const auto& t = traces[static_cast<std::size_t>(fg.face.index())];
        if (t.rows() != model.n_species() || t.cols() != fg.size())
            throw DomainError("boundary_form: trace block size does not match the face grid");
        const int f = fg.face.index();
        for (Eigen::Index s = 0; s < fg.size(); ++s) {
            const Eigen::VectorXd x = grid.position(fg.nodes[static_cast<std::size_t>(s)]);
            const Eigen::VectorXd w = weights.diagonal(x);
            double local = 0.0;
            for (int i = 0; i < model.n_species(); ++i) {
                const double speed = cls.normal_speed(f, i);
                if (speed == 0.0) continue;
                local += w[i] * speed * t(i, s) * t(i, s);
            }
            terms.push_back(fg.weights[s] * local);
        }
    }
    return pairwise_sum(terms);
}

CompiledLaw::CompiledLaw(const ControlLaw& law, const DiscreteVelocityModel& model, const Grid& grid) {
    law.validate(model, grid.domain());
    const BoxDomain& domain = grid.domain();
    const BoundaryClassification cls(model, domain);

    // slot of a volume node within each face grid
    auto slot_of = [&grid](int face, const std::vector<int>& idx) {
        const FaceGrid& fg = grid.face(face);
        Eigen::Index slot = 0, mult = 1;
        for (std::size_t k = 0; k < fg.tangential_axes.size(); ++k) {
            slot += idx[k] * mult;
            mult *= fg.extents[k];
        }
        return slot;
    };

    for (const auto& fg : grid.faces()) {
        const int f = fg.face.index();
        for (int i : cls.species_with(f, Direction::incoming)) {
            for (Eigen::Index s = 0; s < fg.size(); ++s) {
                const Eigen::Index node = fg.nodes[static_cast<std::size_t>(s)];
                Assignment a{i, node, f, s, {}};
                Eigen::VectorXd tangential(static_cast<Eigen::Index>(fg.tangential_axes.size()));
                for (std::size_t k = 0; k < fg.tangential_axes.size(); ++k)
                    tangential[static_cast<Eigen::Index>(k)] =
                        grid.coordinate(fg.tangential_axes[k], grid.index_along(node, fg.tangential_axes[k]));

                for (const auto& rule : law.rules()) {
                    if (rule.face != f || rule.species != i) continue;
                    if (!inside(tangential, rule.active_lower, rule.active_upper, kCoordTol)) continue;
                    for (const auto& term : rule.terms) {
                        const FaceGrid& src = grid.face(term.source_face);
                        const Eigen::VectorXd y = term.map(tangential);
                        // multilinear interpolation along the source face
                        const auto tdim = src.tangential_axes.size();
                        std::vector<int> base(tdim);
                        std::vector<double> frac(tdim);
                        for (std::size_t k = 0; k < tdim; ++k) {
                            const int ax = src.tangential_axes[k];
                            const double u = (y[static_cast<Eigen::Index>(k)] - domain.lower()[ax]) / grid.spacing(ax);
                            int i0 = static_cast<int>(std::floor(u));
                            i0 = std::clamp(i0, 0, grid.cells(ax) - 1);
                            double t = std::clamp(u - i0, 0.0, 1.0);
                            if (t < 1e-9) t = 0.0;
                            if (t > 1.0 - 1e-9) t = 1.0;
                            base[k] = i0;
                            frac[k] = t;
                        }
                        for (unsigned corner = 0; corner < (1u << tdim); ++corner) {
                            double wgt = term.gain;
                            std::vector<int> idx(tdim);
                            for (std::size_t k = 0; k < tdim; ++k) {
                                const bool hi = (corner >> k) & 1u;
                                wgt *= hi ? frac[k] : 1.0 - frac[k];
                                idx[k] = base[k] + (hi ? 1 : 0);
                            }
                            if (wgt == 0.0) continue;
                            const Eigen::Index sslot = slot_of(term.source_face, idx);
                            a.sources.push_back({term.source_species, src.nodes[static_cast<std::size_t>(sslot)],
                                                 term.source_face, sslot, wgt});
                        }
                    }
                }
                assignments_.push_back(std::move(a));
            }
        }
    }
}

void CompiledLaw::apply(Field& field) const {
    std::vector<double> values(assignments_.size());
    for (std::size_t a = 0; a < assignments_.size(); ++a) {
        double v = 0.0;
        for (const auto& s : assignments_[a].sources) v += s.coefficient * field(s.species, s.node);
        values[a] = v;
    }
    for (std::size_t a = 0; a < assignments_.size(); ++a)
        field(assignments_[a].species, assignments_[a].node) = values[a];
}

void CompiledLaw::apply(BoundaryTraces& traces) const {
    std::vector<double> values(assignments_.size());
    for (std::size_t a = 0; a < assignments_.size(); ++a) {
        double v = 0.0;
        for (const auto& s : assignments_[a].sources)
            v += s.coefficient * traces[static_cast<std::size_t>(s.face)](s.species, s.face_slot);
        values[a] = v;
    }
    for (std::size_t a = 0; a < assignments_.size(); ++a)
        traces[static_cast<std::size_t>(assignments_[a].face)](assignments_[a].species, assignments_[a].face_slot) =
            values[a];
}

}  // namespace kinbc
