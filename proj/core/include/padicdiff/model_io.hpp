#pragma once

#include <optional>
#include <string>

#include "padicdiff/manifold.hpp"

namespace padicdiff {

/// Builds a model from a manifold spec document (JSON text with fields p, n,
/// depth, faces, roots). Densities are exact rational strings like "1/2".
ManifoldModel load_model(const std::string& json_text);
ManifoldModel load_model_file(const std::string& path);

/// Canonical JSON echo of a model, byte-stable.
std::string model_to_json(const ManifoldModel& model);

struct BuiltinOptions {
    std::optional<long long> p;
    std::optional<int> n;
    int m = 2;
    std::optional<Rational> density; // single_ball root density override
};

/// Builtin models: "single_ball" (one chart), "p1_q2" (projective line over
/// the 2-adics split along the chart overlap), "triangle" (three charts with
/// a full 2-face).
ManifoldModel builtin_model(const std::string& name, const BuiltinOptions& opts = {});

} // namespace padicdiff
