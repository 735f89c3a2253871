#pragma once

#include "uot/ioformat.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace uot {

struct BenchRecord {
    std::string solver;
    Index n = 0;
    Index m = 0;
    double lambda = 0.0;
    int repeat = 0;
    double wall_time_s = 0.0;
    long iterations = 0;  // solver iterations, or segment count for the path
    double final_objective = 0.0;
    bool ok = true;
};

/// Two Gaussian clouds (unit covariance, distinct means) with uniform masses;
/// the last `outliers` target points are shifted by a fixed vector of norm
/// `outlier_shift`. Deterministic per seed on every platform.
PointCloudProblem gaussian_point_clouds(Index n, Index m, Index dim, std::uint64_t seed,
                                        const std::string& metric = "sqeuclidean",
                                        Index outliers = 0, double outlier_shift = 0.0);

Problem gaussian_problem(Index n, Index m, Index dim, std::uint64_t seed,
                         const std::string& metric = "sqeuclidean", Index outliers = 0,
                         double outlier_shift = 0.0);

/// Times the named solver ("path", "mm-kl", "mm-l2") on a fresh problem per
/// size; only the solver call is inside the timed region. Failures are
/// recorded per run, never fatal.
std::vector<BenchRecord> run_scaling(const std::string& solver, const std::vector<Index>& sizes,
                                     int repeats, std::uint64_t seed, double lambda = 1.0);

struct ExponentFit {
    double exponent = 0.0;
    double r_squared = 0.0;
};

/// Least-squares slope of log(median time) against log(n); needs at least 4
/// distinct sizes. Medians are taken over repeats.
ExponentFit fit_exponent(const std::vector<BenchRecord>& records);

void write_bench_csv(const std::string& path, const std::vector<BenchRecord>& records);

}  // namespace uot
