#include "kinbc/app.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <thread>

#include "kinbc/report.hpp"

namespace kinbc {

namespace {

namespace fs = std::filesystem;

std::ostream& out_of(const AppContext& ctx) { return ctx.out ? *ctx.out : std::cout; }
std::ostream& err_of(const AppContext& ctx) { return ctx.err ? *ctx.err : std::cerr; }

std::string vec_str(const Eigen::VectorXd& v) {
    std::string s = "[";
    for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_number(v[i]);
    return s + "]";
}

std::string short_num(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

fs::path output_path(const RunConfig& cfg, const AppContext& ctx, const std::string& name) {
    const fs::path dir = ctx.output_dir.value_or(cfg.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
    return dir / name;
}

/// Runs `body`, translating library errors into exit codes.
template <typename Body>
int guarded(const AppContext& ctx, Body&& body) {
    try {
        return body();
    } catch (const Error& e) {
        err_of(ctx) << "error: " << e.what() << '\n';
        return e.validation() ? kExitValidation : kExitNumerical;
    } catch (const std::exception& e) {
        err_of(ctx) << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
}

std::string law_summary(const RunConfig& cfg) {
    const auto& c = cfg.control;
    if (c.law == "nonlocal") return "nonlocal (k1 = " + short_num(c.k1) + ")";
    if (c.law == "mixed") return "mixed (k2 = " + short_num(c.k2) + ", k3 = " + short_num(c.k3) + ")";
    return c.law;
}

std::string certificate_text(const LyapunovCertificate& c) {
    std::ostringstream os;
    os << "lyapunov certificate\n"
       << "  alpha        = " << format_number(c.alpha) << '\n'
       << "  lambda       = " << format_number(c.lambda_small) << '\n'
       << "  C1           = " << format_number(c.c1) << '\n'
       << "  C2           = " << format_number(c.c2) << '\n'
       << "  lambda_min   = " << format_number(c.lambda_min) << '\n'
       << "  lambda_max   = " << format_number(c.lambda_max) << '\n'
       << "  C~           = " << format_number(c.c_tilde) << '\n'
       << "  decay rate   = " << format_number(c.decay_rate) << " (functional), " << format_number(c.norm_rate)
       << " (norm)\n"
       << "  overshoot C  = " << format_number(c.overshoot) << '\n'
       << "  valid        = " << (c.valid ? "yes" : "no") << '\n';
    return os.str();
}

std::string admissibility_text(const Admissibility& a) {
    std::ostringstream os;
    os << "admissibility: " << (a.admissible ? "admissible" : "INADMISSIBLE") << " (margin "
       << format_number(a.margin) << ")\n";
    if (!a.tightest.empty()) os << "  " << (a.admissible ? "tightest budget: " : "violated budget: ") << a.tightest
                                << '\n';
    return os.str();
}

struct Built {
    DiscreteVelocityModel model;
    SteadyState fe;
    BoxDomain domain;
};

Built build(const RunConfig& cfg) {
    DiscreteVelocityModel model = build_model(cfg);
    SteadyState fe = build_steady_state(cfg, model);
    BoxDomain domain = build_domain(cfg);
    if (domain.dim() != model.dim())
        throw ConfigError("[domain] dimension " + std::to_string(domain.dim()) + " does not match the velocity dimension " +
                          std::to_string(model.dim()));
    return {std::move(model), std::move(fe), std::move(domain)};
}

}  // namespace

VerifyOutcome verify(const RunConfig& cfg) {
    const Built b = build(cfg);
    VerifyOutcome v;
    v.decomposition = decompose(b.model, b.fe);
    v.residuals = structural_residuals(v.decomposition, source_jacobian(b.model, b.fe));
    v.steady_residual = source_term(b.model, b.fe.values()).cwiseAbs().maxCoeff();
    v.min_speed = b.model.velocities().rowwise().norm().minCoeff();
    return v;
}

DesignOutcome design(const RunConfig& cfg) {
    const Built b = build(cfg);
    const ControlLaw law = build_law(cfg);
    law.validate(b.model, b.domain);
    const StabilityDecomposition d = decompose(b.model, b.fe);
    DesignOutcome out;
    out.certificate = certify(b.model, b.fe, b.domain, d, cfg.alpha, cfg.alpha_margin, cfg.samples_per_axis);
    out.admissibility = check_admissible(law, b.model, b.domain, b.fe, out.certificate.alpha);
    if (cfg.model.preset == "coplanar") {
        out.k1_bound = gain_bound_nonlocal(b.fe.values(), out.certificate.alpha);
        out.k2_k3_bounds = gain_bounds_mixed(b.fe.values(), out.certificate.alpha);
    }
    return out;
}

SimulationOutcome simulate(const RunConfig& cfg, int threads, const std::function<void(const TimeRecord&)>& on_record) {
    const auto start = std::chrono::steady_clock::now();
    const Built b = build(cfg);
    const Grid grid(b.domain, cfg.cells);
    const ControlLaw law = build_law(cfg);
    law.validate(b.model, b.domain);
    if (!(cfg.dt > 0.0)) throw ParameterError("time step must be positive");
    require_cfl(b.model, grid, cfg.dt);

    SimulationOutcome out;
    const StabilityDecomposition d = decompose(b.model, b.fe);
    out.certificate = certify(b.model, b.fe, b.domain, d, cfg.alpha, cfg.alpha_margin, cfg.samples_per_axis);
    out.admissibility = check_admissible(law, b.model, b.domain, b.fe, out.certificate.alpha);

    RunSettings settings;
    settings.dt = cfg.dt;
    settings.t_end = cfg.t_end;
    settings.record_every = cfg.record_every;
    settings.alpha = out.certificate.alpha;
    settings.threads = threads;
    out.steps = step_count(cfg.dt, cfg.t_end);
    out.result = run(b.model, b.fe, grid, law, build_initial_field(cfg, grid, b.model.n_species()), settings,
                     on_record);

    std::vector<double> t;
    std::vector<double> norm;
    for (const auto& r : out.result.records) {
        t.push_back(r.t);
        norm.push_back(r.l2_norm);
    }
    out.fit = fit_decay(t, norm, cfg.resolved_fit_start(), cfg.resolved_fit_end());
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

std::vector<double> parse_range(const std::string& spec) {
    std::string s = spec;
    s.erase(std::remove_if(s.begin(), s.end(), [](char c) { return c == ' ' || c == '{' || c == '}'; }), s.end());
    auto number = [&spec](const std::string& text) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(text, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != text.size() || text.empty() || !std::isfinite(v))
            throw ParameterError("malformed range '" + spec + "'");
        return v;
    };
    std::vector<double> values;
    if (s.empty()) return values;
    if (s.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(s);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() != 3) throw ParameterError("range must be lo:hi:step, got '" + spec + "'");
        const double lo = number(parts[0]);
        const double hi = number(parts[1]);
        const double step = number(parts[2]);
        if (!(step > 0.0)) throw ParameterError("range step must be positive");
        if (hi < lo) return values;
        const long count = static_cast<long>(std::floor((hi - lo) / step + 1e-9)) + 1;
        for (long i = 0; i < count; ++i) values.push_back(lo + static_cast<double>(i) * step);
        return values;
    }
    std::stringstream ss(s);
    for (std::string p; std::getline(ss, p, ',');) values.push_back(number(p));
    return values;
}

void apply_parameter(RunConfig& cfg, const std::string& name, double value) {
    if (name == "k1") cfg.control.k1 = value;
    else if (name == "k2") cfg.control.k2 = value;
    else if (name == "k3") cfg.control.k3 = value;
    else if (name == "alpha") cfg.alpha = value;
    else if (name == "dt") cfg.dt = value;
    else throw ParameterError("unknown sweep parameter '" + name + "' (expected k1, k2, k3, alpha or dt)");
}

std::vector<SweepRow> sweep(const RunConfig& cfg, const std::string& param, const std::vector<double>& values,
                            int threads) {
    {
        RunConfig probe = cfg;
        apply_parameter(probe, param, 0.0);
    }
    std::vector<SweepRow> rows(values.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < rows.size(); i = next++) {
            SweepRow& row = rows[i];
            row.value = values[i];
            try {
                RunConfig c = cfg;
                apply_parameter(c, param, values[i]);
                const SimulationOutcome o = simulate(c, 1);
                row.ok = true;
                row.admissible = o.admissibility.admissible;
                row.fit = o.fit;
                row.final_norm = o.result.records.back().l2_norm;
            } catch (const std::exception& e) {
                row.error = e.what();
            }
        }
    };
    const int workers = std::clamp(threads, 1, static_cast<int>(std::max<std::size_t>(1, rows.size())));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    return rows;
}

int cmd_verify(const std::string& config_path, const AppContext& ctx) {
    return guarded(ctx, [&] {
        const RunConfig cfg = load_config(config_path);
        const VerifyOutcome v = verify(cfg);
        const auto& d = v.decomposition;
        std::ostringstream os;
        os << "structural stability check\n"
           << "  species n            = " << d.n() << '\n'
           << "  steady state f_e     = " << vec_str(cfg.steady_state) << '\n'
           << "  |Q(f_e)|_inf         = " << format_number(v.steady_residual) << '\n'
           << "  min |u_k|            = " << format_number(v.min_speed) << " (no zero velocity)\n"
           << "  spectrum             = " << vec_str(d.spectrum) << '\n'
           << "  r                    = " << d.rank << '\n'
           << "  Lambda               = " << vec_str(d.lambda) << '\n'
           << "  similarity residual  = " << format_number(v.residuals.similarity) << '\n'
           << "  symmetrizer residual = " << format_number(v.residuals.symmetrizer) << '\n';
        out_of(ctx) << os.str();
        nlohmann::json data = {{"command", "verify"},
                               {"steady_residual", v.steady_residual},
                               {"min_speed", v.min_speed},
                               {"decomposition", to_json(d, v.residuals)}};
        write_report(output_path(cfg, ctx, cfg.report).string(), os.str() + "\nconfig\n" + serialize_config(cfg),
                     data);
        return static_cast<int>(kExitOk);
    });
}

int cmd_design(const std::string& config_path, const AppContext& ctx) {
    return guarded(ctx, [&] {
        const RunConfig cfg = load_config(config_path);
        const DesignOutcome o = design(cfg);
        std::ostringstream os;
        os << "law: " << law_summary(cfg) << '\n' << certificate_text(o.certificate);
        if (o.k1_bound) {
            os << "closed-form gain bounds at alpha = " << format_number(o.certificate.alpha) << '\n'
               << "  nonlocal: k1 <= " << format_number(*o.k1_bound) << '\n'
               << "  mixed:    k2 <= " << format_number(o.k2_k3_bounds->first)
               << ", k3 <= " << format_number(o.k2_k3_bounds->second) << '\n';
        }
        os << admissibility_text(o.admissibility);
        out_of(ctx) << os.str();
        nlohmann::json data = {{"command", "design"},
                               {"law", cfg.control.law},
                               {"certificate", to_json(o.certificate)},
                               {"admissibility", to_json(o.admissibility)}};
        if (o.k1_bound) {
            data["bounds"] = {{"k1", *o.k1_bound}, {"k2", o.k2_k3_bounds->first}, {"k3", o.k2_k3_bounds->second}};
        }
        write_report(output_path(cfg, ctx, cfg.report).string(), os.str() + "\nconfig\n" + serialize_config(cfg),
                     data);
        if (!o.certificate.valid)
            err_of(ctx) << "warning: no decay certificate at alpha = " << format_number(o.certificate.alpha)
                        << " (C~ = " << format_number(o.certificate.c_tilde) << " <= 0); raise alpha or use auto\n";
        if (!o.admissibility.admissible) {
            err_of(ctx) << "error: control law is not admissible: " << o.admissibility.tightest << '\n';
            return static_cast<int>(kExitValidation);
        }
        return static_cast<int>(kExitOk);
    });
}

int cmd_simulate(const std::string& config_path, const AppContext& ctx) {
    return guarded(ctx, [&] {
        const RunConfig cfg = load_config(config_path);
        const fs::path csv_path = output_path(cfg, ctx, cfg.csv);
        std::optional<CsvWriter> csv;
        int n_species = 0;
        auto on_record = [&](const TimeRecord& r) {
            if (!csv) {
                n_species = static_cast<int>(r.species_norms.size());
                csv.emplace(csv_path.string(), n_species);
            }
            csv->write(r);
        };
        SimulationOutcome o;
        try {
            o = simulate(cfg, ctx.threads, on_record);
        } catch (const DivergenceError& e) {
            err_of(ctx) << "error: " << e.what() << " (species f" << e.species() + 1 << "); partial series kept in "
                        << csv_path.string() << '\n';
            return static_cast<int>(kExitNumerical);
        }
        if (!o.admissibility.admissible)
            err_of(ctx) << "warning: control law is not admissible (" << o.admissibility.tightest
                        << "); running anyway\n";

        std::ostringstream os;
        os << "law: " << law_summary(cfg) << '\n'
           << certificate_text(o.certificate) << admissibility_text(o.admissibility) << "run\n"
           << "  steps         = " << o.steps << '\n'
           << "  records       = " << o.result.records.size() << '\n'
           << "  final t       = " << format_number(o.result.final_state.t) << '\n'
           << "  final L2 norm = " << format_number(o.result.records.back().l2_norm) << '\n'
           << "  wall time     = " << short_num(o.seconds) << " s\n"
           << "decay fit on [" << format_number(o.fit.window_start) << ", " << format_number(o.fit.window_end)
           << "]\n";
        if (o.fit.ok) {
            os << "  nu_fit        = " << format_number(o.fit.rate) << '\n'
               << "  R^2           = " << format_number(o.fit.r_squared) << '\n'
               << "  samples       = " << o.fit.samples << '\n';
        } else {
            os << "  nu_fit undefined: " << o.fit.message << '\n';
        }
        os << "csv: " << csv_path.string() << '\n';
        out_of(ctx) << os.str();

        nlohmann::json data = {{"command", "simulate"},
                               {"law", cfg.control.law},
                               {"certificate", to_json(o.certificate)},
                               {"admissibility", to_json(o.admissibility)},
                               {"fit", to_json(o.fit)},
                               {"steps", o.steps},
                               {"records", o.result.records.size()},
                               {"final_l2_norm", o.result.records.back().l2_norm},
                               {"wall_seconds", o.seconds},
                               {"csv", csv_path.string()}};
        if (!cfg.snapshot.empty()) {
            const fs::path snap = output_path(cfg, ctx, cfg.snapshot);
            write_snapshot(snap.string(), o.result.final_state.f, build_grid(cfg), o.result.final_state.t);
            data["snapshot"] = snap.string();
        }
        write_report(output_path(cfg, ctx, cfg.report).string(), os.str() + "\nconfig\n" + serialize_config(cfg),
                     data);
        return static_cast<int>(kExitOk);
    });
}

int cmd_sweep(const std::string& config_path, const std::string& param, const std::string& range,
              const AppContext& ctx) {
    return guarded(ctx, [&] {
        const RunConfig cfg = load_config(config_path);
        const std::vector<double> values = parse_range(range);
        if (values.empty()) throw ParameterError("range '" + range + "' is empty");
        const std::vector<SweepRow> rows = sweep(cfg, param, values, ctx.threads);

        const fs::path path = output_path(cfg, ctx, "sweep.csv");
        std::ofstream table(path);
        if (!table) throw IoError("cannot open '" + path.string() + "' for writing");
        table << param << ",admissible,nu_fit,r_squared,final_norm,status\n";
        std::ostream& out = out_of(ctx);
        out << param << "  admissible  nu_fit  R^2  final_norm  status\n";
        bool any_ok = false;
        for (const auto& r : rows) {
            any_ok = any_ok || r.ok;
            std::string status = r.ok ? (r.fit.ok ? "ok" : "fit: " + r.fit.message) : "error: " + r.error;
            std::replace(status.begin(), status.end(), ',', ';');
            const std::string nu = r.ok && r.fit.ok ? format_number(r.fit.rate) : "nan";
            const std::string r2 = r.ok && r.fit.ok ? format_number(r.fit.r_squared) : "nan";
            const std::string fin = r.ok ? format_number(r.final_norm) : "nan";
            table << format_number(r.value) << ',' << (r.ok ? (r.admissible ? "1" : "0") : "") << ',' << nu << ','
                  << r2 << ',' << fin << ',' << status << '\n';
            out << short_num(r.value) << "  " << (r.ok ? (r.admissible ? "yes" : "no") : "-") << "  " << nu << "  "
                << r2 << "  " << fin << "  " << status << '\n';
        }
        if (!table) throw IoError("write to '" + path.string() + "' failed");
        out << "table: " << path.string() << '\n';
        return static_cast<int>(any_ok ? kExitOk : kExitNumerical);
    });
}

}  // namespace kinbc
