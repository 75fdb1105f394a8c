#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "kinbc/boundary.hpp"
#include "kinbc/grid.hpp"
#include "kinbc/model.hpp"

namespace kinbc {

struct SimulationState {
    double t = 0.0;
    Field f;
    long step = 0;
};

/// max_k sum_j |u_kj| dt / dx_j.
double cfl_number(const DiscreteVelocityModel& model, const Grid& grid, double dt);

/// Throws CflError when the CFL number exceeds 1.
void require_cfl(const DiscreteVelocityModel& model, const Grid& grid, double dt);

/// First-order upwind explicit Euler for f_t + sum_j Lambda_j f_{x_j} = J f,
/// followed by the control-law overwrite of incoming boundary nodes.
class UpwindStepper {
public:
    /// Throws CflError when the CFL number exceeds 1.
    UpwindStepper(const DiscreteVelocityModel& model, const Grid& grid, Eigen::MatrixXd jacobian,
                  const ControlLaw& law, double dt, int threads = 1);

    double dt() const noexcept { return dt_; }
    const Grid& grid() const noexcept { return grid_; }

    /// Advances by dt (or by `dt_override` when positive and not larger than dt).
    /// Throws DivergenceError on a non-finite value.
    void advance(SimulationState& state, double dt_override = 0.0) const;

private:
    void update_range(const Field& f, Field& g, Eigen::Index begin, Eigen::Index end, double dt) const;

    Eigen::MatrixXd velocities_;
    Grid grid_;
    Eigen::MatrixXd jacobian_;
    CompiledLaw law_;
    double dt_;
    int threads_;
    /// bit 2j: node on the lower face of axis j; bit 2j+1: on the upper face.
    std::vector<std::uint32_t> face_bits_;
};

/// One step from `state`; convenience wrapper over UpwindStepper.
SimulationState step(const SimulationState& state, const DiscreteVelocityModel& model, const Grid& grid,
                     const Eigen::MatrixXd& jacobian, const ControlLaw& law, double dt);

struct RunSettings {
    double dt = 0.0;
    double t_end = 0.0;
    int record_every = 1;
    double alpha = 1.0;
    int threads = 1;
    /// Abort once ||f|| exceeds this multiple of ||f0||.
    double divergence_factor = 1e6;
};

struct TimeRecord {
    double t = 0.0;
    double l2_norm = 0.0;
    double lyapunov = 0.0;
    double boundary_form = 0.0;
    Eigen::VectorXd species_norms;
};

struct SimulationResult {
    std::vector<TimeRecord> records;
    SimulationState final_state;
};

/// Number of steps to reach t_end; the last step is shortened when t_end is
/// not a multiple of dt.
long step_count(double dt, double t_end);

/// Per-species trapezoid L2 norms and the total.
Eigen::VectorXd species_norms(const Field& f, const Grid& grid);
double l2_norm(const Field& f, const Grid& grid);

/// Steps to t_end, recording every `record_every` steps (step 0 included).
/// Records are also handed to `on_record` as they are produced, so a caller
/// streaming them keeps the partial series when a DivergenceError escapes.
SimulationResult run(const DiscreteVelocityModel& model, const SteadyState& fe, const Grid& grid,
                     const ControlLaw& law, Field initial, const RunSettings& settings,
                     const std::function<void(const TimeRecord&)>& on_record = {});

}  // namespace kinbc
