#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kinbc/boundary.hpp"
#include "kinbc/config.hpp"
#include "kinbc/fit.hpp"
#include "kinbc/lyapunov.hpp"
#include "kinbc/solver.hpp"
#include "kinbc/stability.hpp"

namespace kinbc {

/// Process exit codes of the command-line driver.
enum ExitCode : int { kExitOk = 0, kExitNumerical = 1, kExitValidation = 2 };

struct AppContext {
    int threads = 1;
    /// Overrides the config's output directory when set.
    std::optional<std::string> output_dir;
    std::ostream* out = nullptr;
    std::ostream* err = nullptr;
};

struct VerifyOutcome {
    StabilityDecomposition decomposition;
    StructuralResiduals residuals;
    double steady_residual = 0.0;
    double min_speed = 0.0;
};

struct DesignOutcome {
    LyapunovCertificate certificate;
    Admissibility admissibility;
    /// Closed-form gain limits at the certificate's alpha (coplanar preset only).
    std::optional<double> k1_bound;
    std::optional<std::pair<double, double>> k2_k3_bounds;
};

struct SimulationOutcome {
    LyapunovCertificate certificate;
    Admissibility admissibility;
    SimulationResult result;
    DecayFit fit;
    long steps = 0;
    double seconds = 0.0;
};

VerifyOutcome verify(const RunConfig& cfg);
DesignOutcome design(const RunConfig& cfg);
/// Runs the configured simulation and fits the decay rate of the plain L2 norm.
/// Errors (including DivergenceError) propagate; records produced before a
/// failure have already been passed to `on_record`.
SimulationOutcome simulate(const RunConfig& cfg, int threads,
                           const std::function<void(const TimeRecord&)>& on_record = {});

/// `lo:hi:step` (inclusive of hi up to rounding) or a comma-separated list,
/// optionally in braces. Throws ParameterError on malformed input; the
/// result may be empty.
std::vector<double> parse_range(const std::string& spec);
/// Sets one of k1, k2, k3, alpha, dt. Throws ParameterError otherwise.
void apply_parameter(RunConfig& cfg, const std::string& name, double value);

struct SweepRow {
    double value = 0.0;
    bool ok = false;
    bool admissible = false;
    DecayFit fit;
    double final_norm = 0.0;
    std::string error;
};

/// Runs every value concurrently on up to `threads` workers; rows are
/// returned in range order. Per-row failures are recorded, not thrown.
std::vector<SweepRow> sweep(const RunConfig& cfg, const std::string& param, const std::vector<double>& values,
                            int threads);

int cmd_verify(const std::string& config_path, const AppContext& ctx);
int cmd_design(const std::string& config_path, const AppContext& ctx);
int cmd_simulate(const std::string& config_path, const AppContext& ctx);
int cmd_sweep(const std::string& config_path, const std::string& param, const std::string& range,
              const AppContext& ctx);

}  // namespace kinbc
