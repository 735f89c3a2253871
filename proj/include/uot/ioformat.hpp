#pragma once

#include "uot/regpath.hpp"
#include "uot/types.hpp"

#include <string>

namespace uot {

/// A problem instance with explicit cost matrix.
struct Problem {
    Matrix C;
    Vector a;
    Vector b;
};

/// A problem given as two point clouds; the cost matrix is derived from the
/// chosen metric on load.
struct PointCloudProblem {
    Matrix X;  // n x d
    Matrix Y;  // m x d
    Vector a;
    Vector b;
    std::string metric = "sqeuclidean";
};

/// C_ij = ||x_i - y_j||^2 ("sqeuclidean") or ||x_i - y_j|| ("euclidean").
Matrix cost_from_points(const Matrix& X, const Matrix& Y, const std::string& metric);

/// Problem files hold either {a, b, C} or {a, b, X, Y, metric}; loading the
/// latter computes the cost matrix. All numbers survive a save/load round
/// trip bit-for-bit.
Problem load_problem(const std::string& path);
void save_problem(const std::string& path, const Problem& problem);
void save_problem(const std::string& path, const PointCloudProblem& problem);

void save_plan(const std::string& path, const Matrix& plan);
Matrix load_plan(const std::string& path);

/// FNV-1a over the raw bytes of (n, m, a, b, C); ties a path file to the
/// problem it was computed from.
std::string problem_hash(const Problem& problem);

struct ImportedPath {
    RegularizationPath path;
    std::string problem_hash;
};

/// Versioned path files; lambda = +inf is written as the literal token "inf".
/// Unknown future format versions are rejected.
void export_path(const std::string& file, const RegularizationPath& path,
                 const std::string& problem_hash);
ImportedPath import_path(const std::string& file);

}  // namespace uot
