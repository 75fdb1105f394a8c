#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "kinbc/boundary.hpp"
#include "kinbc/grid.hpp"
#include "kinbc/model.hpp"

namespace kinbc {

/// Run configuration. The text form is sectioned `key = value` lines
/// (sections model, steady_state, domain, time, control, lyapunov, output,
/// initial); arrays are bracketed comma lists, species indices are 1-based.
struct RunConfig {
    struct Model {
        std::string preset = "coplanar";  // coplanar | explicit
        double speed = 1.0;
        double sigma = 0.1;
        Eigen::MatrixXd velocities;
        std::vector<DiscreteVelocityModel::Collision> collisions;  // zero-based
    } model;

    Eigen::VectorXd steady_state = Eigen::Vector4d(4.0, 3.0, 2.0, 6.0);
    double steady_tolerance = SteadyState::kDefaultTolerance;

    Eigen::VectorXd lower = Eigen::Vector2d(0.0, 0.0);
    Eigen::VectorXd upper = Eigen::Vector2d(1.0, 1.0);
    std::vector<int> cells = {100, 100};

    double dt = 0.002;
    double t_end = 10.0;
    int record_every = 1;
    std::optional<double> fit_start;
    std::optional<double> fit_end;

    struct Control {
        std::string law = "zero";  // zero | nonlocal | mixed
        double k1 = 0.0;
        double k2 = 0.0;
        double k3 = 0.0;
        std::pair<double, double> interval = {1.0 / 3.0, 2.0 / 3.0};
    } control;

    std::optional<double> alpha;  // empty: automatic selection
    double alpha_margin = 0.1;
    int samples_per_axis = 8;

    std::string output_dir = ".";
    std::string csv = "timeseries.csv";
    std::string report = "report.txt";
    std::string snapshot;  // empty: no field snapshot

    struct Initial {
        std::string type = "constant";  // constant | sinusoid
        Eigen::VectorXd values = Eigen::Vector4d::Ones();
        Eigen::VectorXd modes;  // sinusoid: mode number per axis
    } initial;

    double resolved_fit_start() const { return fit_start.value_or(t_end / 5.0); }
    double resolved_fit_end() const { return fit_end.value_or(t_end); }
};

/// Throws ConfigError with the offending key on malformed input.
RunConfig parse_config(std::istream& in);
RunConfig parse_config_string(const std::string& text);
RunConfig load_config(const std::string& path);

std::string serialize_config(const RunConfig& cfg);

DiscreteVelocityModel build_model(const RunConfig& cfg);
SteadyState build_steady_state(const RunConfig& cfg, const DiscreteVelocityModel& model);
BoxDomain build_domain(const RunConfig& cfg);
Grid build_grid(const RunConfig& cfg);
ControlLaw build_law(const RunConfig& cfg);
Field build_initial_field(const RunConfig& cfg, const Grid& grid, int n_species);

}  // namespace kinbc
