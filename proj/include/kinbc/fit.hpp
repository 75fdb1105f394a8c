#pragma once

#include <optional>
#include <span>
#include <string>

namespace kinbc {

/// Least-squares line through (t, log norm) restricted to a time window.
struct DecayFit {
    bool ok = false;
    /// -slope of log norm; positive means decay.
    double rate = 0.0;
    double intercept = 0.0;
    /// Coefficient of determination; 1 by convention for a constant response.
    double r_squared = 0.0;
    int samples = 0;
    double window_start = 0.0;
    double window_end = 0.0;
    std::string message;
};

/// Fits over t in [window_start, window_end]. Returns ok = false (with a
/// message) when fewer than 3 samples fall in the window or a norm there is
/// not positive.
DecayFit fit_decay(std::span<const double> times, std::span<const double> norms, double window_start,
                   double window_end);

}  // namespace kinbc
