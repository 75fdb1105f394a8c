#include "kinbc/fit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace kinbc {

DecayFit fit_decay(std::span<const double> times, std::span<const double> norms, double window_start,
                   double window_end) {
    DecayFit fit;
    fit.window_start = window_start;
    fit.window_end = window_end;
    if (times.size() != norms.size()) {
        fit.message = "time and norm series differ in length";
        return fit;
    }
    const double tol = 1e-9 * std::max(1.0, std::abs(window_end));
    std::vector<double> t, y;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < window_start - tol || times[i] > window_end + tol) continue;
        if (!(norms[i] > 0.0) || !std::isfinite(norms[i])) {
            std::ostringstream os;
            os << "norm " << norms[i] << " at t = " << times[i] << " is not positive; decay rate undefined";
            fit.message = os.str();
            return fit;
        }
        t.push_back(times[i]);
        y.push_back(std::log(norms[i]));
    }
    fit.samples = static_cast<int>(t.size());
    if (t.size() < 3) {
        fit.message = "fewer than 3 samples in the fit window";
        return fit;
    }

    const double count = static_cast<double>(t.size());
    double tm = 0.0, ym = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        tm += t[i];
        ym += y[i];
    }
    tm /= count;
    ym /= count;
    double stt = 0.0, sty = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        stt += (t[i] - tm) * (t[i] - tm);
        sty += (t[i] - tm) * (y[i] - ym);
        syy += (y[i] - ym) * (y[i] - ym);
    }
    if (stt == 0.0) {
        fit.message = "fit window contains a single time value";
        return fit;
    }
    // a constant response is an exact fit with zero slope
    const auto [ylo, yhi] = std::minmax_element(y.begin(), y.end());
    const double slope = *ylo == *yhi ? 0.0 : sty / stt;
    fit.rate = slope == 0.0 ? 0.0 : -slope;
    fit.intercept = ym - slope * tm;
    double sse = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double e = y[i] - (fit.intercept + slope * t[i]);
        sse += e * e;
    }
    // zero-variance response: the fit is exact
    fit.r_squared = *ylo == *yhi || syy <= 1e-30 * std::max(1.0, ym * ym) ? 1.0 : std::clamp(1.0 - sse / syy, 0.0, 1.0);
    fit.ok = true;
    return fit;
}

}  // namespace kinbc
