#include "kinbc/solver.hpp"

#include <cmath>
#include <sstream>
#include <thread>

#include "kinbc/lyapunov.hpp"

namespace kinbc {

namespace {

constexpr double kCflSlack = 1e-12;

template <typename Fn>
void parallel_for(Eigen::Index begin, Eigen::Index end, int threads, Fn&& fn) {
    const Eigen::Index count = end - begin;
    if (threads <= 1 || count < 2048) {
        fn(begin, end);
        return;
    }
    const Eigen::Index chunk = (count + threads - 1) / threads;
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) {
        const Eigen::Index lo = begin + t * chunk;
        const Eigen::Index hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
}

}  // namespace

double cfl_number(const DiscreteVelocityModel& model, const Grid& grid, double dt) {
    if (model.dim() != grid.dim()) throw DomainError("model and grid dimensions differ");
    const Eigen::VectorXd per_species = model.velocities().cwiseAbs() * grid.spacings().cwiseInverse();
    return dt * per_species.maxCoeff();
}

void require_cfl(const DiscreteVelocityModel& model, const Grid& grid, double dt) {
    const double cfl = cfl_number(model, grid, dt);
    if (cfl > 1.0 + kCflSlack) {
        std::ostringstream os;
        os << "CFL number " << cfl << " exceeds 1 (dt = " << dt << "); reduce the time step";
        throw CflError(os.str());
    }
}

UpwindStepper::UpwindStepper(const DiscreteVelocityModel& model, const Grid& grid, Eigen::MatrixXd jacobian,
                             const ControlLaw& law, double dt, int threads)
    : velocities_(model.velocities()),
      grid_(grid),
      jacobian_(std::move(jacobian)),
      law_(law, model, grid),
      dt_(dt),
      threads_(std::max(1, threads)) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError("time step must be positive");
    if (jacobian_.rows() != model.n_species() || jacobian_.cols() != model.n_species())
        throw DomainError("source Jacobian size does not match the model");
    require_cfl(model, grid, dt);
    face_bits_.assign(static_cast<std::size_t>(grid.node_count()), 0u);
    for (Eigen::Index p = 0; p < grid.node_count(); ++p) {
        std::uint32_t bits = 0;
        for (int j = 0; j < grid.dim(); ++j) {
            const int i = grid.index_along(p, j);
            if (i == 0) bits |= 1u << (2 * j);
            if (i == grid.cells(j)) bits |= 1u << (2 * j + 1);
        }
        face_bits_[static_cast<std::size_t>(p)] = bits;
    }
}

void UpwindStepper::update_range(const Field& f, Field& g, Eigen::Index begin, Eigen::Index end, double dt) const {
    const int n = static_cast<int>(f.rows());
    const int d = grid_.dim();
    const double* src = f.data();
    double* dst = g.data();
    for (Eigen::Index p = begin; p < end; ++p) {
        const std::uint32_t bits = face_bits_[static_cast<std::size_t>(p)];
        const double* fp = src + p * n;
        for (int k = 0; k < n; ++k) {
            double flux = 0.0;
            for (int j = 0; j < d; ++j) {
                const double u = velocities_(k, j);
                const Eigen::Index s = grid_.stride(j) * n;
                // missing upwind neighbour: the node is an inflow node for this
                // direction and is overwritten by the control law afterwards
                if (u > 0.0) {
                    if (!(bits & (1u << (2 * j)))) flux += u * (fp[k] - fp[k - s]) / grid_.spacing(j);
                } else if (u < 0.0) {
                    if (!(bits & (1u << (2 * j + 1)))) flux += u * (fp[k + s] - fp[k]) / grid_.spacing(j);
                }
            }
            double source = 0.0;
            for (int m = 0; m < n; ++m) source += jacobian_(k, m) * fp[m];
            dst[p * n + k] = fp[k] - dt * flux + dt * source;
        }
    }
}

void UpwindStepper::advance(SimulationState& state, double dt_override) const {
    const double dt = dt_override > 0.0 && dt_override <= dt_ ? dt_override : dt_;
    if (state.f.rows() != jacobian_.rows() || state.f.cols() != grid_.node_count())
        throw DomainError("state field does not match the grid");
    Field next(state.f.rows(), state.f.cols());
    parallel_for(0, grid_.node_count(), threads_,
                 [&](Eigen::Index lo, Eigen::Index hi) { update_range(state.f, next, lo, hi, dt); });
    law_.apply(next);

    if (!next.allFinite()) {
        for (Eigen::Index p = 0; p < next.cols(); ++p)
            for (Eigen::Index k = 0; k < next.rows(); ++k)
                if (!std::isfinite(next(k, p))) {
                    std::ostringstream os;
                    os << "non-finite value at step " << state.step + 1 << ", species " << k + 1;
                    throw DivergenceError(os.str(), state.step + 1, static_cast<int>(k));
                }
    }
    state.f = std::move(next);
    state.t += dt;
    ++state.step;
}

SimulationState step(const SimulationState& state, const DiscreteVelocityModel& model, const Grid& grid,
                     const Eigen::MatrixXd& jacobian, const ControlLaw& law, double dt) {
    const UpwindStepper stepper(model, grid, jacobian, law, dt);
    SimulationState next = state;
    stepper.advance(next);
    return next;
}

long step_count(double dt, double t_end) {
    if (!(dt > 0.0)) throw ParameterError("time step must be positive");
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw ParameterError("end time must be nonnegative");
    return static_cast<long>(std::ceil(t_end / dt - 1e-9));
}

Eigen::VectorXd species_norms(const Field& f, const Grid& grid) {
    const Eigen::VectorXd& q = grid.quadrature_weights();
    Eigen::VectorXd out(f.rows());
    std::vector<double> terms(static_cast<std::size_t>(f.cols()));
    for (Eigen::Index k = 0; k < f.rows(); ++k) {
        for (Eigen::Index p = 0; p < f.cols(); ++p) terms[static_cast<std::size_t>(p)] = q[p] * f(k, p) * f(k, p);
        out[k] = std::sqrt(pairwise_sum(terms));
    }
    return out;
}

double l2_norm(const Field& f, const Grid& grid) {
    const Eigen::VectorXd& q = grid.quadrature_weights();
    std::vector<double> terms(static_cast<std::size_t>(f.cols()));
    for (Eigen::Index p = 0; p < f.cols(); ++p) terms[static_cast<std::size_t>(p)] = q[p] * f.col(p).squaredNorm();
    return std::sqrt(pairwise_sum(terms));
}

SimulationResult run(const DiscreteVelocityModel& model, const SteadyState& fe, const Grid& grid,
                     const ControlLaw& law, Field initial, const RunSettings& settings,
                     const std::function<void(const TimeRecord&)>& on_record) {
    if (settings.record_every < 1) throw ParameterError("record_every must be at least 1");
    if (initial.rows() != model.n_species() || initial.cols() != grid.node_count())
        throw DomainError("initial field does not match the grid");
    const long steps = step_count(settings.dt, settings.t_end);
    const UpwindStepper stepper(model, grid, source_jacobian(model, fe), law, settings.dt, settings.threads);
    const BoundaryWeights weights = BoundaryWeights::lyapunov(model, fe, settings.alpha);
    const Eigen::MatrixXd w_nodes = node_weights(grid, weights);

    SimulationResult result;
    result.final_state.f = std::move(initial);

    auto record = [&](const SimulationState& s) {
        TimeRecord r;
        r.t = s.t;
        r.species_norms = species_norms(s.f, grid);
        r.l2_norm = l2_norm(s.f, grid);
        r.lyapunov = weighted_energy(s.f, grid, w_nodes);
        r.boundary_form = boundary_form(extract_traces(s.f, grid), grid, model, weights);
        if (on_record) on_record(r);
        result.records.push_back(std::move(r));
    };

    SimulationState& state = result.final_state;
    const double norm0 = l2_norm(state.f, grid);
    record(state);
    for (long k = 0; k < steps; ++k) {
        const double remaining = settings.t_end - state.t;
        stepper.advance(state, k == steps - 1 ? remaining : 0.0);
        if (k == steps - 1) state.t = settings.t_end;
        else state.t = static_cast<double>(state.step) * settings.dt;
        const double norm = l2_norm(state.f, grid);
        if (norm0 > 0.0 && norm > settings.divergence_factor * norm0) {
            const Eigen::VectorXd per = species_norms(state.f, grid);
            Eigen::Index worst;
            per.maxCoeff(&worst);
            std::ostringstream os;
            os << "solution diverged at step " << state.step << " (t = " << state.t << "): norm " << norm
               << " exceeds " << settings.divergence_factor << " x initial norm";
            throw DivergenceError(os.str(), state.step, static_cast<int>(worst));
        }
        if (state.step % settings.record_every == 0) record(state);
    }
    return result;
}

}  // namespace kinbc
