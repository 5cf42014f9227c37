#include "padicdiff/reports.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace padicdiff {

using nlohmann::ordered_json;

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string spectrum_csv(const SpectrumReport& report) {
    std::string out = "eigenvalue,multiplicity,max_residual\n";
    for (std::size_t i = 0; i < report.values.size(); ++i) {
        out += fmt_double(report.values[i]) + "," + std::to_string(report.multiplicities[i]) + "," +
               fmt_double(report.residuals[i]) + "\n";
    }
    return out;
}

std::string distances_csv(const ManifoldModel& model) {
    std::string out = "x,y,distance\n";
    const auto cells = model.enumerate_cells();
    for (const auto& x : cells) {
        for (const auto& y : cells) {
            if (x == y) continue;
            out += model.cell_address_string(x) + "," + model.cell_address_string(y) + "," +
                   fmt_double(model.distance(x, y)) + "\n";
        }
    }
    return out;
}

std::string matrix_csv(const Matrix& m) {
    std::string out = "row,col,value\n";
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            if (m(i, j) == 0.0) continue;
            out += std::to_string(i) + "," + std::to_string(j) + "," + fmt_double(m(i, j)) + "\n";
        }
    }
    return out;
}

std::string matrix_text(const ManifoldModel& model, const OperatorMatrix& L, const std::string& kernel_desc) {
    std::string out;
    out += "# kernel: " + kernel_desc + "\n";
    out += "# cells: " + std::to_string(L.cell_order.size()) + "\n";
    out += "# ordering:";
    for (const auto& c : L.cell_order) out += " " + model.cell_address_string(c);
    out += "\n";
    out += "# mu:";
    for (const auto& m : L.mu) out += " " + m.str();
    out += "\n";
    out += "# balance_defect: " + fmt_double(L.balance_defect) + "\n";
    out += matrix_csv(L.entries);
    return out;
}

std::string wavelet_report_csv(const ManifoldModel& model, const std::vector<WaveletEigenReport>& rows) {
    std::string out =
        "wavelet,closed_form_lambda,oracle_lambda,residual,deviation,nonlocal,closed_form_local,oracle_local\n";
    for (const auto& r : rows) {
        out += wavelet_label(model, r.index) + "," + fmt_double(r.closed_form_lambda) + "," +
               fmt_double(r.oracle_lambda) + "," + fmt_double(r.residual) + "," + fmt_double(r.deviation) +
               "," + fmt_double(r.nonlocal) + "," + fmt_double(r.closed_form_local) + "," +
               fmt_double(r.oracle_local) + "\n";
    }
    return out;
}

std::string solution_csv(const ManifoldModel& model, const SolutionReport& report) {
    std::string out = "cell,value\n";
    for (std::size_t i = 0; i < report.closure_order.size(); ++i) {
        const double v = report.u.empty() ? 0.0 : report.u[i];
        out += model.cell_address_string(report.closure_order[i]) + "," + fmt_double(v) + "\n";
    }
    return out;
}

std::string solution_report_json(const SolutionReport& report) {
    ordered_json doc;
    doc["solved"] = report.solved;
    doc["unique"] = report.unique;
    doc["residual"] = report.residual;
    doc["coercivity_beta"] = report.coercivity_beta;
    doc["continuity_alpha"] = report.continuity_alpha;
    doc["poincare_constant"] = report.poincare_constant;
    doc["poincare_verified"] = report.poincare_verified;
    doc["condition_estimate"] = report.condition_estimate;
    doc["omega_cells"] = report.omega_order.size();
    doc["closure_cells"] = report.closure_order.size();
    doc["boundary_cells"] = report.closure_order.size() - report.omega_order.size();
    if (report.theta_certificate != 0.0) {
        doc["theta_certificate"] = report.theta_certificate;
        doc["energy_alpha"] = report.energy_alpha;
        doc["energy_beta"] = report.energy_beta;
    }
    return doc.dump(2) + "\n";
}

std::string markov_report_json(const MarkovReport& report) {
    ordered_json doc;
    doc["applicable"] = report.applicable;
    doc["times"] = report.times;
    doc["positivity_defect"] = report.positivity_defect;
    doc["conservation_defect"] = report.conservation_defect;
    doc["l2_contraction"] = report.l2_contraction;
    doc["sobolev_defect"] = report.sobolev_defect;
    doc["invariant_residual"] = report.invariant_residual;
    doc["samples"] = report.samples;
    return doc.dump(2) + "\n";
}

std::string inspect_json(const ManifoldModel& model) {
    ordered_json doc;
    doc["p"] = model.ctx().p;
    doc["n"] = model.ctx().n;
    doc["depth"] = model.ctx().m;
    doc["dim_nerve"] = model.dim_nerve();
    doc["total_measure"] = model.total_measure().str();
    doc["roots"] = ordered_json::array();
    for (int r = 0; r < static_cast<int>(model.roots().size()); ++r) {
        const auto& root = model.roots()[static_cast<std::size_t>(r)];
        ordered_json item;
        item["id"] = root.id;
        item["face"] = model.nerve().faces[static_cast<std::size_t>(root.face)].id;
        item["density"] = root.density.str();
        item["tail"] = model.root_tail(r).str();
        doc["roots"].push_back(std::move(item));
    }
    doc["faces"] = ordered_json::array();
    for (int f = 0; f < static_cast<int>(model.nerve().faces.size()); ++f) {
        ordered_json item;
        item["id"] = model.nerve().faces[static_cast<std::size_t>(f)].id;
        item["height"] = model.face_height(f);
        item["measure"] = model.face_measure(f).str();
        doc["faces"].push_back(std::move(item));
    }
    doc["cells"] = model.cell_count();
    return doc.dump(2) + "\n";
}

void write_file(const std::string& path, const std::string& content) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out.good()) throw validation_error("cannot write '" + path + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out.good()) throw validation_error("write failed for '" + path + "'");
}

} // namespace padicdiff
