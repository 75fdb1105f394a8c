#include "kinbc/report.hpp"

#include <cstdio>

namespace kinbc {

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_header(int n_species) {
    std::string h = "t,l2_norm,lyapunov,boundary_form";
    for (int k = 1; k <= n_species; ++k) h += ",norm_f" + std::to_string(k);
    return h;
}

std::string csv_row(const TimeRecord& r) {
    std::string row = format_number(r.t) + ',' + format_number(r.l2_norm) + ',' + format_number(r.lyapunov) + ',' +
                      format_number(r.boundary_form);
    for (Eigen::Index k = 0; k < r.species_norms.size(); ++k) row += ',' + format_number(r.species_norms[k]);
    return row;
}

CsvWriter::CsvWriter(const std::string& path, int n_species) : out_(path) {
    if (!out_) throw IoError("cannot open '" + path + "' for writing");
    out_ << csv_header(n_species) << '\n' << std::flush;
}

void CsvWriter::write(const TimeRecord& record) {
    out_ << csv_row(record) << '\n' << std::flush;
    if (!out_) throw IoError("write to the CSV file failed");
}

void write_snapshot(const std::string& path, const Field& field, const Grid& grid, double t) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << field.rows() << ' ' << grid.dim();
    for (int j = 0; j < grid.dim(); ++j) out << ' ' << grid.nodes(j);
    out << ' ' << format_number(t) << '\n';
    for (Eigen::Index p = 0; p < field.cols(); ++p)
        for (Eigen::Index k = 0; k < field.rows(); ++k) out << format_number(field(k, p)) << '\n';
    if (!out) throw IoError("write to '" + path + "' failed");
}

namespace {

nlohmann::json vector_json(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
    return rows;
}

}  // namespace

nlohmann::json to_json(const StabilityDecomposition& d, const StructuralResiduals& residuals) {
    return {
        {"rank", d.rank},
        {"lambda", vector_json(d.lambda)},
        {"spectrum", vector_json(d.spectrum)},
        {"lambda0", vector_json(d.lambda0.diagonal())},
        {"p", matrix_json(d.p)},
        {"similarity_residual", residuals.similarity},
        {"symmetrizer_residual", residuals.symmetrizer},
    };
}

nlohmann::json to_json(const LyapunovCertificate& c) {
    return {
        {"alpha", c.alpha},           {"lambda", c.lambda_small},   {"c1", c.c1},
        {"c2", c.c2},                 {"lambda_min", c.lambda_min}, {"lambda_max", c.lambda_max},
        {"coercivity", c.coercivity}, {"c_tilde", c.c_tilde},       {"decay_rate", c.decay_rate},
        {"norm_rate", c.norm_rate},   {"overshoot", c.overshoot},   {"rank", c.rank},
        {"valid", c.valid},
    };
}

nlohmann::json to_json(const Admissibility& a) {
    return {{"admissible", a.admissible}, {"margin", a.margin}, {"tightest", a.tightest}};
}

nlohmann::json to_json(const DecayFit& f) {
    return {
        {"ok", f.ok},
        {"rate", f.rate},
        {"intercept", f.intercept},
        {"r_squared", f.r_squared},
        {"samples", f.samples},
        {"window", {f.window_start, f.window_end}},
        {"message", f.message},
    };
}

void write_report(const std::string& path, const std::string& text, const nlohmann::json& data) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
    out << kReportDataMarker << '\n' << data.dump(2) << '\n';
    if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace kinbc
