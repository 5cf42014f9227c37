#pragma once

#include <string>
#include <vector>

#include "padicdiff/analysis.hpp"
#include "padicdiff/spectral.hpp"
#include "padicdiff/wavelets.hpp"

namespace padicdiff {

/// Shortest round-trip decimal form; identical inputs give identical bytes.
std::string fmt_double(double v);

std::string spectrum_csv(const SpectrumReport& report);
std::string distances_csv(const ManifoldModel& model);
std::string matrix_csv(const Matrix& m);

/// Structured text dump with the cell ordering header and kernel metadata.
std::string matrix_text(const ManifoldModel& model, const OperatorMatrix& L, const std::string& kernel_desc);

std::string wavelet_report_csv(const ManifoldModel& model, const std::vector<WaveletEigenReport>& rows);

std::string solution_csv(const ManifoldModel& model, const SolutionReport& report);
std::string solution_report_json(const SolutionReport& report);
std::string markov_report_json(const MarkovReport& report);
std::string inspect_json(const ManifoldModel& model);

/// Writes the full content in one pass; nothing is left behind on error.
void write_file(const std::string& path, const std::string& content);

} // namespace padicdiff
