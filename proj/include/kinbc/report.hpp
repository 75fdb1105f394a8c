#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "kinbc/boundary.hpp"
#include "kinbc/fit.hpp"
#include "kinbc/grid.hpp"
#include "kinbc/lyapunov.hpp"
#include "kinbc/solver.hpp"
#include "kinbc/stability.hpp"

namespace kinbc {

/// `t,l2_norm,lyapunov,boundary_form,norm_f1,...,norm_fn`.
std::string csv_header(int n_species);
/// One CSV row, every value printed with 17 significant digits.
std::string csv_row(const TimeRecord& record);
/// %.17g.
std::string format_number(double v);

/// Streams records to a CSV file, flushing each row so a run that aborts
/// leaves the rows produced so far on disk.
class CsvWriter {
public:
    /// Throws Error when the file cannot be opened.
    CsvWriter(const std::string& path, int n_species);
    void write(const TimeRecord& record);

private:
    std::ofstream out_;
};

/// Flat field dump: a header line `n d nodes_1 ... nodes_d t`, then one value
/// per line, species fastest, nodes in grid order.
void write_snapshot(const std::string& path, const Field& field, const Grid& grid, double t);

nlohmann::json to_json(const StabilityDecomposition& d, const StructuralResiduals& residuals);
nlohmann::json to_json(const LyapunovCertificate& c);
nlohmann::json to_json(const Admissibility& a);
nlohmann::json to_json(const DecayFit& f);

/// Writes the human-readable text followed by a machine-readable JSON section.
void write_report(const std::string& path, const std::string& text, const nlohmann::json& data);

/// Marker line that separates the text part from the JSON part of a report.
inline constexpr const char* kReportDataMarker = "----- data (json) -----";

}  // namespace kinbc
