#include "kinbc/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

namespace kinbc {

namespace {

namespace pt = boost::property_tree;
using nlohmann::json;

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"model", {"preset", "speed", "sigma", "velocities", "collisions"}},
        {"steady_state", {"values", "tolerance"}},
        {"domain", {"lower", "upper", "cells"}},
        {"time", {"dt", "t_end", "record_every", "fit_start", "fit_end"}},
        {"control", {"law", "k1", "k2", "k3", "interval"}},
        {"lyapunov", {"alpha", "margin", "samples"}},
        {"output", {"dir", "csv", "report", "snapshot"}},
        {"initial", {"type", "values", "modes"}},
    };
    return keys;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_vector(const Eigen::VectorXd& v) {
    std::string s = "[";
    for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
    return s + "]";
}

class Reader {
public:
    explicit Reader(const pt::ptree& tree) : tree_(tree) {}

    std::optional<std::string> raw(const std::string& section, const std::string& key) const {
        auto sec = tree_.get_child_optional(section);
        if (!sec) return std::nullopt;
        auto v = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
        if (!v) return std::nullopt;
        return *v;
    }

    template <typename T>
    void scalar(const std::string& section, const std::string& key, T& out) const {
        if (auto v = raw(section, key)) out = parse<T>(section, key, *v);
    }

    template <typename T>
    void optional_scalar(const std::string& section, const std::string& key, std::optional<T>& out) const {
        if (auto v = raw(section, key)) out = parse<T>(section, key, *v);
    }

    void vector(const std::string& section, const std::string& key, Eigen::VectorXd& out) const {
        auto v = raw(section, key);
        if (!v) return;
        const json j = as_json(section, key, *v);
        if (!j.is_array()) fail(section, key, "expected a bracketed list of numbers");
        out.resize(static_cast<Eigen::Index>(j.size()));
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (!j[i].is_number()) fail(section, key, "expected a bracketed list of numbers");
            out[static_cast<Eigen::Index>(i)] = j[i].get<double>();
        }
    }

    json as_json(const std::string& section, const std::string& key, const std::string& text) const {
        try {
            return json::parse(text);
        } catch (const json::exception&) {
            fail(section, key, "cannot parse '" + text + "'");
        }
    }

    [[noreturn]] static void fail(const std::string& section, const std::string& key, const std::string& why) {
        throw ConfigError("[" + section + "] " + key + ": " + why);
    }

private:
    template <typename T>
    T parse(const std::string& section, const std::string& key, const std::string& text) const {
        if constexpr (std::is_same_v<T, std::string>) {
            return text;
        } else {
            std::istringstream is(text);
            T value{};
            is >> value;
            if (!is || !(is >> std::ws).eof()) fail(section, key, "cannot parse '" + text + "'");
            if constexpr (std::is_floating_point_v<T>) {
                if (!std::isfinite(value)) fail(section, key, "value must be finite");
            }
            return value;
        }
    }

    const pt::ptree& tree_;
};

}  // namespace

RunConfig parse_config(std::istream& in) {
    // the INI reader only understands ';' comments
    std::ostringstream cleaned;
    for (std::string line; std::getline(in, line);) {
        const auto first = line.find_first_not_of(" \t");
        if (first != std::string::npos && line[first] == '#') continue;
        // trailing comments start at whitespace followed by ';' or '#'
        for (std::size_t k = 1; k < line.size(); ++k) {
            if ((line[k] == ';' || line[k] == '#') && (line[k - 1] == ' ' || line[k - 1] == '\t')) {
                line.erase(line.find_last_not_of(" \t", k - 1) + 1);
                break;
            }
        }
        // the tree drops empty sections, so headers are checked here
        if (first != std::string::npos && line[first] == '[') {
            const auto close = line.find(']', first);
            if (close != std::string::npos) {
                const std::string name = line.substr(first + 1, close - first - 1);
                if (!known_keys().count(name)) throw ConfigError("unknown config section [" + name + "]");
            }
        }
        cleaned << line << '\n';
    }
    pt::ptree tree;
    try {
        std::istringstream is(cleaned.str());
        pt::ini_parser::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax error: ") + e.what());
    }

    for (const auto& [section, body] : tree) {
        auto it = known_keys().find(section);
        if (it == known_keys().end()) throw ConfigError("unknown config section [" + section + "]");
        for (const auto& [key, value] : body) {
            (void)value;
            if (!it->second.count(key)) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
        }
    }

    const Reader r(tree);
    RunConfig cfg;

    r.scalar("model", "preset", cfg.model.preset);
    r.scalar("model", "speed", cfg.model.speed);
    r.scalar("model", "sigma", cfg.model.sigma);
    if (auto v = r.raw("model", "velocities")) {
        const json j = r.as_json("model", "velocities", *v);
        if (!j.is_array() || j.empty() || !j[0].is_array())
            Reader::fail("model", "velocities", "expected a list of velocity vectors");
        const std::size_t d = j[0].size();
        cfg.model.velocities.resize(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(d));
        for (std::size_t k = 0; k < j.size(); ++k) {
            if (!j[k].is_array() || j[k].size() != d) Reader::fail("model", "velocities", "ragged velocity list");
            for (std::size_t c = 0; c < d; ++c) {
                if (!j[k][c].is_number()) Reader::fail("model", "velocities", "velocity components must be numbers");
                cfg.model.velocities(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) = j[k][c].get<double>();
            }
        }
    }
    if (auto v = r.raw("model", "collisions")) {
        const json j = r.as_json("model", "collisions", *v);
        if (!j.is_array()) Reader::fail("model", "collisions", "expected a list of [i, j, k, l, rate] entries");
        for (const auto& e : j) {
            if (!e.is_array() || e.size() != 5) Reader::fail("model", "collisions", "entries are [i, j, k, l, rate]");
            for (std::size_t c = 0; c < 4; ++c)
                if (!e[c].is_number_integer()) Reader::fail("model", "collisions", "species indices must be integers");
            if (!e[4].is_number()) Reader::fail("model", "collisions", "rate must be a number");
            cfg.model.collisions.push_back({e[0].get<int>() - 1, e[1].get<int>() - 1, e[2].get<int>() - 1,
                                            e[3].get<int>() - 1, e[4].get<double>()});
        }
    }

    r.vector("steady_state", "values", cfg.steady_state);
    r.scalar("steady_state", "tolerance", cfg.steady_tolerance);

    r.vector("domain", "lower", cfg.lower);
    r.vector("domain", "upper", cfg.upper);
    if (auto v = r.raw("domain", "cells")) {
        const json j = r.as_json("domain", "cells", *v);
        if (!j.is_array()) Reader::fail("domain", "cells", "expected a list of integers");
        cfg.cells.clear();
        for (const auto& c : j) {
            if (!c.is_number_integer()) Reader::fail("domain", "cells", "expected a list of integers");
            cfg.cells.push_back(c.get<int>());
        }
    }

    r.scalar("time", "dt", cfg.dt);
    r.scalar("time", "t_end", cfg.t_end);
    r.scalar("time", "record_every", cfg.record_every);
    r.optional_scalar("time", "fit_start", cfg.fit_start);
    r.optional_scalar("time", "fit_end", cfg.fit_end);

    r.scalar("control", "law", cfg.control.law);
    r.scalar("control", "k1", cfg.control.k1);
    r.scalar("control", "k2", cfg.control.k2);
    r.scalar("control", "k3", cfg.control.k3);
    if (r.raw("control", "interval")) {
        Eigen::VectorXd iv;
        r.vector("control", "interval", iv);
        if (iv.size() != 2) Reader::fail("control", "interval", "expected [lower, upper]");
        cfg.control.interval = {iv[0], iv[1]};
    }

    if (auto v = r.raw("lyapunov", "alpha")) {
        if (*v == "auto") {
            cfg.alpha.reset();
        } else {
            double a = 0.0;
            r.scalar("lyapunov", "alpha", a);
            cfg.alpha = a;
        }
    }
    r.scalar("lyapunov", "margin", cfg.alpha_margin);
    r.scalar("lyapunov", "samples", cfg.samples_per_axis);

    r.scalar("output", "dir", cfg.output_dir);
    r.scalar("output", "csv", cfg.csv);
    r.scalar("output", "report", cfg.report);
    r.scalar("output", "snapshot", cfg.snapshot);

    r.scalar("initial", "type", cfg.initial.type);
    r.vector("initial", "values", cfg.initial.values);
    r.vector("initial", "modes", cfg.initial.modes);

    if (!(cfg.dt > 0.0)) Reader::fail("time", "dt", "must be positive");
    if (!(cfg.t_end >= 0.0)) Reader::fail("time", "t_end", "must be nonnegative");
    if (cfg.record_every < 1) Reader::fail("time", "record_every", "must be at least 1");
    if (cfg.alpha && !(*cfg.alpha > 0.0)) Reader::fail("lyapunov", "alpha", "must be positive or 'auto'");
    if (!(cfg.alpha_margin > 0.0)) Reader::fail("lyapunov", "margin", "must be positive");
    if (cfg.samples_per_axis < 2) Reader::fail("lyapunov", "samples", "must be at least 2");
    return cfg;
}

RunConfig parse_config_string(const std::string& text) {
    std::istringstream is(text);
    return parse_config(is);
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in);
}

std::string serialize_config(const RunConfig& cfg) {
    pt::ptree tree;
    auto put = [&tree](const std::string& section, const std::string& key, const std::string& value) {
        tree.put(pt::ptree::path_type(section + '\x1f' + key, '\x1f'), value);
    };
    put("model", "preset", cfg.model.preset);
    put("model", "speed", fmt(cfg.model.speed));
    put("model", "sigma", fmt(cfg.model.sigma));
    if (cfg.model.velocities.size()) {
        std::string s = "[";
        for (Eigen::Index k = 0; k < cfg.model.velocities.rows(); ++k)
            s += (k ? ", " : "") + fmt_vector(cfg.model.velocities.row(k).transpose());
        put("model", "velocities", s + "]");
    }
    if (!cfg.model.collisions.empty()) {
        std::string s = "[";
        for (std::size_t c = 0; c < cfg.model.collisions.size(); ++c) {
            const auto& e = cfg.model.collisions[c];
            s += (c ? ", [" : "[") + std::to_string(e.i + 1) + ", " + std::to_string(e.j + 1) + ", " +
                 std::to_string(e.k + 1) + ", " + std::to_string(e.l + 1) + ", " + fmt(e.rate) + "]";
        }
        put("model", "collisions", s + "]");
    }
    put("steady_state", "values", fmt_vector(cfg.steady_state));
    put("steady_state", "tolerance", fmt(cfg.steady_tolerance));
    put("domain", "lower", fmt_vector(cfg.lower));
    put("domain", "upper", fmt_vector(cfg.upper));
    {
        std::string s = "[";
        for (std::size_t j = 0; j < cfg.cells.size(); ++j) s += (j ? ", " : "") + std::to_string(cfg.cells[j]);
        put("domain", "cells", s + "]");
    }
    put("time", "dt", fmt(cfg.dt));
    put("time", "t_end", fmt(cfg.t_end));
    put("time", "record_every", std::to_string(cfg.record_every));
    if (cfg.fit_start) put("time", "fit_start", fmt(*cfg.fit_start));
    if (cfg.fit_end) put("time", "fit_end", fmt(*cfg.fit_end));
    put("control", "law", cfg.control.law);
    put("control", "k1", fmt(cfg.control.k1));
    put("control", "k2", fmt(cfg.control.k2));
    put("control", "k3", fmt(cfg.control.k3));
    put("control", "interval", "[" + fmt(cfg.control.interval.first) + ", " + fmt(cfg.control.interval.second) + "]");
    put("lyapunov", "alpha", cfg.alpha ? fmt(*cfg.alpha) : "auto");
    put("lyapunov", "margin", fmt(cfg.alpha_margin));
    put("lyapunov", "samples", std::to_string(cfg.samples_per_axis));
    put("output", "dir", cfg.output_dir);
    put("output", "csv", cfg.csv);
    put("output", "report", cfg.report);
    if (!cfg.snapshot.empty()) put("output", "snapshot", cfg.snapshot);
    put("initial", "type", cfg.initial.type);
    put("initial", "values", fmt_vector(cfg.initial.values));
    if (cfg.initial.modes.size()) put("initial", "modes", fmt_vector(cfg.initial.modes));

    std::ostringstream os;
    pt::ini_parser::write_ini(os, tree);
    return os.str();
}

DiscreteVelocityModel build_model(const RunConfig& cfg) {
    if (cfg.model.preset == "coplanar") return build_coplanar(cfg.model.speed, cfg.model.sigma);
    if (cfg.model.preset == "explicit") {
        if (cfg.model.velocities.size() == 0) throw ConfigError("[model] velocities: required for an explicit model");
        return DiscreteVelocityModel(cfg.model.velocities, cfg.model.collisions);
    }
    throw ConfigError("[model] preset: expected 'coplanar' or 'explicit', got '" + cfg.model.preset + "'");
}

SteadyState build_steady_state(const RunConfig& cfg, const DiscreteVelocityModel& model) {
    if (cfg.steady_state.size() != model.n_species())
        throw ConfigError("[steady_state] values: expected " + std::to_string(model.n_species()) + " components");
    return SteadyState(model, cfg.steady_state, cfg.steady_tolerance);
}

BoxDomain build_domain(const RunConfig& cfg) { return BoxDomain(cfg.lower, cfg.upper); }

Grid build_grid(const RunConfig& cfg) { return Grid(build_domain(cfg), cfg.cells); }

ControlLaw build_law(const RunConfig& cfg) {
    const auto& c = cfg.control;
    if (c.law == "zero") return coplanar_zero_law();
    if (c.law == "nonlocal") return coplanar_nonlocal_law(c.k1, c.interval);
    if (c.law == "mixed") return coplanar_mixed_law(c.k2, c.k3, c.interval);
    throw ConfigError("[control] law: expected zero, nonlocal or mixed, got '" + c.law + "'");
}

Field build_initial_field(const RunConfig& cfg, const Grid& grid, int n_species) {
    const auto& init = cfg.initial;
    if (init.values.size() != n_species)
        throw ConfigError("[initial] values: expected " + std::to_string(n_species) + " components");
    Field f(n_species, grid.node_count());
    if (init.type == "constant") {
        f.colwise() = init.values;
        return f;
    }
    if (init.type == "sinusoid") {
        if (init.modes.size() != grid.dim())
            throw ConfigError("[initial] modes: expected one mode number per axis");
        const double pi = std::acos(-1.0);
        for (Eigen::Index p = 0; p < grid.node_count(); ++p) {
            const Eigen::VectorXd x = grid.position(p);
            double shape = 1.0;
            for (int j = 0; j < grid.dim(); ++j)
                shape *= std::sin(pi * init.modes[j] * (x[j] - grid.domain().lower()[j]) / grid.domain().extent(j));
            f.col(p) = init.values * shape;
        }
        return f;
    }
    throw ConfigError("[initial] type: expected constant or sinusoid, got '" + init.type + "'");
}

}  // namespace kinbc
