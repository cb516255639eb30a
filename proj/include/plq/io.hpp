#pragma once

#include "plq/ip_solver.hpp"
#include "plq/kalman.hpp"

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace plq::io {

using json = nlohmann::json;

json load_json(const std::filesystem::path& path);

/// Rows of numbers; the first line is a header when it does not parse.
std::vector<std::vector<double>> read_csv(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Inline row arrays, a bare number (1x1), or {"csv": "file"} relative to base.
Mat matrix_from_json(const json& j, const std::filesystem::path& base);
Vec vector_from_json(const json& j, const std::filesystem::path& base);

/// {"kind": "huber", "dim": 3, "kappa": 1} or explicit
/// {"lower": [...], "upper": [...], "M": ..., "b": ..., "B": ...}; infinite
/// bounds as null or "inf"/"-inf".
QsPenalty penalty_from_json(const json& j, const std::filesystem::path& base);

/// {"penalty": {...}} or {"V", "W", "H", "G", "R", "Q", "z", "mu"}.
PlqProblem problem_from_json(const json& j, const std::filesystem::path& base);

/// {"spline": {"dt", "lambda2", "N", "noninformative"}} or explicit lists
/// "G", "H", "Q", "R" (one entry broadcasts to every step) plus "x0", "N".
StateSpaceModel model_from_json(const json& j, const std::filesystem::path& base);

/// Columns k, z_1..z_m (a missing k column is allowed).
std::vector<Vec> measurements_from_csv(const std::filesystem::path& path, Eigen::Index m);

std::string xhat_csv(const std::vector<Vec>& x);
std::string vector_csv(const std::string& name, const Vec& v);

}  // namespace plq::io
