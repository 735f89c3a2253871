#include "uot/bench.hpp"

#include "uot/mm.hpp"
#include "uot/regpath.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <random>

namespace uot {

namespace {

// Box-Muller over the raw 53-bit uniforms so generated problems are
// reproducible across standard libraries, not just across runs.
struct GaussianSampler {
    std::mt19937_64 engine;
    double spare = 0.0;
    bool has_spare = false;

    explicit GaussianSampler(std::uint64_t seed) : engine(seed) {}

    double uniform01() { return double(engine() >> 11) * 0x1.0p-53 + 0x1.0p-54; }

    double normal() {
        if (has_spare) {
            has_spare = false;
            return spare;
        }
        const double u = uniform01(), v = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u));
        spare = r * std::sin(2.0 * M_PI * v);
        has_spare = true;
        return r * std::cos(2.0 * M_PI * v);
    }
};

}  // namespace

PointCloudProblem gaussian_point_clouds(Index n, Index m, Index dim, std::uint64_t seed,
                                        const std::string& metric, Index outliers,
                                        double outlier_shift) {
    if (n < 1 || m < 1 || dim < 1) throw std::invalid_argument("gaussian_point_clouds: sizes must be >= 1");
    if (outliers < 0 || outliers > m)
        throw std::invalid_argument("gaussian_point_clouds: outlier count out of range");
    GaussianSampler rng(seed);
    PointCloudProblem p;
    p.metric = metric;
    p.X.resize(n, dim);
    p.Y.resize(m, dim);
    for (Index i = 0; i < n; ++i)
        for (Index d = 0; d < dim; ++d) p.X(i, d) = rng.normal();
    // Target cloud centred two units away along the first axis.
    for (Index j = 0; j < m; ++j) {
        for (Index d = 0; d < dim; ++d) p.Y(j, d) = rng.normal();
        p.Y(j, 0) += 2.0;
    }
    for (Index k = 0; k < outliers; ++k) p.Y(m - 1 - k, 0) += outlier_shift;
    p.a = Vector::Constant(n, 1.0 / double(n));
    p.b = Vector::Constant(m, 1.0 / double(m));
    return p;
}

Problem gaussian_problem(Index n, Index m, Index dim, std::uint64_t seed,
                         const std::string& metric, Index outliers, double outlier_shift) {
    const PointCloudProblem p = gaussian_point_clouds(n, m, dim, seed, metric, outliers, outlier_shift);
    return Problem{cost_from_points(p.X, p.Y, metric), p.a, p.b};
}

std::vector<BenchRecord> run_scaling(const std::string& solver, const std::vector<Index>& sizes,
                                     int repeats, std::uint64_t seed, double lambda) {
    if (!std::is_sorted(sizes.begin(), sizes.end()))
        throw std::invalid_argument("run_scaling: sizes must be sorted ascending");
    if (repeats < 1) throw std::invalid_argument("run_scaling: repeats must be >= 1");

    std::vector<BenchRecord> records;
    for (const Index size : sizes) {
        const Problem p = gaussian_problem(size, size, 10, seed + std::uint64_t(size));
        for (int rep = 0; rep < repeats; ++rep) {
            BenchRecord rec;
            rec.solver = solver;
            rec.n = rec.m = size;
            rec.lambda = lambda;
            rec.repeat = rep;
            try {
                const auto start = std::chrono::steady_clock::now();
                if (solver == "path") {
                    const RegularizationPath path = compute_path(p.C, p.a, p.b);
                    rec.iterations = long(path.segments.size());
                    rec.final_objective = 0.0;
                } else if (solver == "mm-kl" || solver == "mm-l2") {
                    const SolveReport rep2 = solve_mm(
                        solver == "mm-kl" ? MmMethod::Kl : MmMethod::L2, p.C, p.a, p.b, lambda);
                    rec.iterations = rep2.iterations;
                    rec.final_objective = rep2.final_objective;
                } else {
                    throw std::invalid_argument("run_scaling: unknown solver '" + solver + "'");
                }
                const auto stop = std::chrono::steady_clock::now();
                rec.wall_time_s = std::chrono::duration<double>(stop - start).count();
            } catch (const std::exception&) {
                rec.ok = false;
            }
            records.push_back(std::move(rec));
        }
    }
    return records;
}

ExponentFit fit_exponent(const std::vector<BenchRecord>& records) {
    std::map<Index, std::vector<double>> by_size;
    for (const auto& rec : records)
        if (rec.ok) by_size[rec.n].push_back(rec.wall_time_s);
    if (by_size.size() < 4) throw std::invalid_argument("fit_exponent: need at least 4 distinct sizes");

    std::vector<double> xs, ys;
    for (auto& [size, times] : by_size) {
        std::sort(times.begin(), times.end());
        const size_t k = times.size();
        const double median = k % 2 == 1 ? times[k / 2] : 0.5 * (times[k / 2 - 1] + times[k / 2]);
        if (median <= 0.0) throw std::invalid_argument("fit_exponent: non-positive timing");
        xs.push_back(std::log(double(size)));
        ys.push_back(std::log(median));
    }

    const double N = double(xs.size());
    double sx = 0, sy = 0;
    for (size_t k = 0; k < xs.size(); ++k) {
        sx += xs[k];
        sy += ys[k];
    }
    const double mx = sx / N, my = sy / N;
    double sxx = 0, sxy = 0, syy = 0;
    for (size_t k = 0; k < xs.size(); ++k) {
        sxx += (xs[k] - mx) * (xs[k] - mx);
        sxy += (xs[k] - mx) * (ys[k] - my);
        syy += (ys[k] - my) * (ys[k] - my);
    }
    if (sxx <= 0.0) throw std::invalid_argument("fit_exponent: zero variance in sizes");

    ExponentFit fit;
    fit.exponent = sxy / sxx;
    const double ss_res = syy - sxy * sxy / sxx;
    fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;  // constant times fit exactly
    return fit;
}

void write_bench_csv(const std::string& path, const std::vector<BenchRecord>& records) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out.precision(17);
    out << "solver,n,m,lambda,repeat,wall_time_s,iters\n";
    for (const auto& rec : records)
        out << rec.solver << ',' << rec.n << ',' << rec.m << ',' << rec.lambda << ',' << rec.repeat
            << ',' << rec.wall_time_s << ',' << rec.iterations << '\n';
}

}  // namespace uot
