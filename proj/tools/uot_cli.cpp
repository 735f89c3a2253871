#include "uot/bench.hpp"
#include "uot/divergence.hpp"
#include "uot/ioformat.hpp"
#include "uot/mm.hpp"
#include "uot/oracle.hpp"
#include "uot/regpath.hpp"
#include "uot/srpath.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

// Exit codes: 0 ok, 1 check failed, 2 not converged, 64 usage, 65 bad data.
constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitNotConverged = 2;
constexpr int kExitUsage = 64;
constexpr int kExitData = 65;

uot::Lambda parse_lambda(const std::string& text) {
    if (text == "inf" || text == "Inf" || text == "INF") return uot::Lambda::infinity();
    size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("cannot parse lambda '" + text + "'");
    }
    if (pos != text.size()) throw std::invalid_argument("cannot parse lambda '" + text + "'");
    return uot::Lambda::finite(v);
}

std::vector<uot::Index> parse_sizes(const std::string& text) {
    std::vector<uot::Index> sizes;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        sizes.push_back(uot::Index(std::stol(item)));
    }
    if (sizes.empty()) throw std::invalid_argument("--sizes: empty list");
    return sizes;
}

// Objective in the divergence-weighted form <C,T> + lambda * penalties,
// which stays finite at lambda = 0 (used for the breakpoints CSV).
double penalized_objective(const uot::RegularizationPath& path, const uot::Problem& p,
                           double lambda, const uot::Matrix& T) {
    double penalty = 0.5 * (T.rowwise().sum() - p.a).squaredNorm();
    if (!path.semi_relaxed)
        penalty += 0.5 * (T.colwise().sum().transpose() - p.b).squaredNorm();
    return (p.C.array() * T.array()).sum() + lambda * penalty;
}

struct SolveArgs {
    std::string problem, out, method;
    double lambda = 0.0, lambda1 = 0.0, lambda2 = 0.0, lambda_reg = -1.0;
    double tol = 1e-10;
    int max_iters = 100000;
    int inner_iters = 1;
    std::string init = "outer-product";
};

int run_solve(const SolveArgs& args, bool lambda_given, bool weights_given) {
    const bool is_ruot = args.method == "mm-ruot";
    if (is_ruot && (!weights_given || lambda_given)) {
        std::cerr << "usage: mm-ruot needs --lambda1/--lambda2/--lambda-reg (and no --lambda)\n";
        return kExitUsage;
    }
    if (!is_ruot && (!lambda_given || weights_given)) {
        std::cerr << "usage: method '" << args.method << "' needs --lambda (and no --lambda1/..)\n";
        return kExitUsage;
    }

    const uot::Problem p = uot::load_problem(args.problem);
    uot::MmConfig config;
    config.max_iters = args.max_iters;
    config.rel_tol = args.tol;
    config.init = args.init == "uniform" ? uot::MmInit::Uniform : uot::MmInit::OuterProduct;

    uot::SolveReport report;
    if (args.method == "ipot") {
        report.plan = uot::ipot_solve(p.C, p.a, p.b, args.lambda, args.max_iters, args.inner_iters);
        report.iterations = args.max_iters;
        report.final_objective = (p.C.array() * report.plan.array()).sum();
        report.marginal_error_rows = (report.plan.rowwise().sum() - p.a).lpNorm<Eigen::Infinity>();
        report.marginal_error_cols =
            (report.plan.colwise().sum().transpose() - p.b).lpNorm<Eigen::Infinity>();
        report.converged =
            std::max(report.marginal_error_rows, report.marginal_error_cols) <= args.tol;
    } else if (is_ruot) {
        report = uot::solve_mm_ruot(p.C, p.a, p.b,
                                    uot::PenaltyWeights{args.lambda1, args.lambda2, args.lambda_reg},
                                    config);
    } else {
        uot::MmMethod method;
        if (args.method == "mm-kl") method = uot::MmMethod::Kl;
        else if (args.method == "mm-l2") method = uot::MmMethod::L2;
        else if (args.method == "mm-l2-alt") method = uot::MmMethod::L2Alt;
        else {
            std::cerr << "usage: unknown method '" << args.method << "'\n";
            return kExitUsage;
        }
        report = uot::solve_mm(method, p.C, p.a, p.b, args.lambda, config);
    }

    if (!args.out.empty()) uot::save_plan(args.out, report.plan);
    std::printf("method: %s\n", args.method.c_str());
    std::printf("objective: %.12g\n", report.final_objective);
    std::printf("iterations: %d\n", report.iterations);
    std::printf("marginal_error_rows: %.12g\n", report.marginal_error_rows);
    std::printf("marginal_error_cols: %.12g\n", report.marginal_error_cols);
    std::printf("converged: %s\n", report.converged ? "true" : "false");
    return report.converged ? kExitOk : kExitNotConverged;
}

int run_path(const std::string& problem_file, const std::string& out, std::string csv,
             bool semi_relaxed, int max_segments) {
    const uot::Problem p = uot::load_problem(problem_file);
    uot::PathOptions options;
    options.max_segments = max_segments;
    const uot::RegularizationPath path = semi_relaxed
                                             ? uot::compute_sr_path(p.C, p.a, p.b, options)
                                             : uot::compute_path(p.C, p.a, p.b, options);
    uot::export_path(out, path, uot::problem_hash(p));

    if (csv.empty()) csv = out + ".csv";
    std::ofstream cs(csv);
    if (!cs) throw std::runtime_error("cannot write '" + csv + "'");
    cs.precision(17);
    cs << "lambda,active_size,objective\n";
    for (const auto& seg : path.segments) {
        const double lam = seg.lambda_lo;
        const uot::Matrix T = lam > 0.0
                                  ? (semi_relaxed ? uot::eval_sr_path_at(path, uot::Lambda::finite(lam))
                                                  : uot::eval_path_at(path, uot::Lambda::finite(lam)))
                                  : uot::eval_segment(path, 0, uot::Lambda::infinity());
        cs << lam << ',' << seg.active.size() << ',' << penalized_objective(path, p, lam, T) << '\n';
    }
    std::printf("segments: %zu\n", path.segments.size());
    std::printf("first_breakpoint: %.12g\n", path.segments.front().lambda_lo);
    std::printf("terminal_balanced: %s\n", path.terminal_balanced ? "true" : "false");
    std::printf("complete: %s\n", path.complete ? "true" : "false");
    return kExitOk;
}

int run_eval_path(const std::string& path_file, const std::string& lambda_text,
                  const std::string& out, const std::string& problem_file) {
    const uot::ImportedPath imported = uot::import_path(path_file);
    const uot::Lambda lambda = parse_lambda(lambda_text);
    const uot::Matrix T = imported.path.semi_relaxed ? uot::eval_sr_path_at(imported.path, lambda)
                                                     : uot::eval_path_at(imported.path, lambda);
    if (!out.empty()) uot::save_plan(out, T);
    std::printf("lambda: %s\n", lambda.infinite ? "inf" : lambda_text.c_str());
    std::printf("mass: %.12g\n", T.sum());
    if (!problem_file.empty()) {
        const uot::Problem p = uot::load_problem(problem_file);
        if (uot::problem_hash(p) != imported.problem_hash)
            throw std::runtime_error("problem file does not match the path file (hash mismatch)");
        std::printf("cost: %.12g\n", (p.C.array() * T.array()).sum());
    }
    return kExitOk;
}

int run_check(const std::string& problem_file, const std::string& plan_file, double lambda,
              bool semi_relaxed) {
    const uot::Problem p = uot::load_problem(problem_file);
    const uot::Matrix T = uot::load_plan(plan_file);
    if (T.rows() != p.C.rows() || T.cols() != p.C.cols())
        throw std::runtime_error("plan shape does not match the problem");
    const uot::KktResidual res = uot::kkt_check(
        semi_relaxed ? uot::ProblemKind::SemiRelaxed : uot::ProblemKind::Full, T, lambda, p.C, p.a,
        p.b);
    std::printf("stationarity_active: %.12g\n", res.stationarity_active);
    std::printf("dual_feasibility: %.12g\n", res.dual_feasibility);
    std::printf("complementarity: %.12g\n", res.complementarity);
    std::printf("primal_feasibility: %.12g\n", res.primal_feasibility);
    const bool ok = res.pass(1e-6);
    std::printf("pass: %s\n", ok ? "true" : "false");
    return ok ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact unbalanced optimal transport: multiplicative solvers and the "
                 "quadratic-penalty regularization path"};
    app.require_subcommand(1);

    // solve
    SolveArgs solve_args;
    auto* solve = app.add_subcommand("solve", "Solve a fixed-lambda problem");
    solve->add_option("--problem", solve_args.problem, "Problem file")->required();
    solve->add_option("--out", solve_args.out, "Output plan file");
    solve->add_option("--method", solve_args.method, "mm-kl | mm-l2 | mm-l2-alt | mm-ruot | ipot")
        ->required();
    auto* lam_opt = solve->add_option("--lambda", solve_args.lambda, "Penalty weight");
    auto* l1_opt = solve->add_option("--lambda1", solve_args.lambda1, "Row penalty (mm-ruot)");
    solve->add_option("--lambda2", solve_args.lambda2, "Column penalty (mm-ruot)");
    solve->add_option("--lambda-reg", solve_args.lambda_reg, "Plan regularization (mm-ruot)");
    solve->add_option("--tol", solve_args.tol, "Relative objective tolerance");
    solve->add_option("--max-iters", solve_args.max_iters, "Iteration cap (outer loop for ipot)");
    solve->add_option("--inner-iters", solve_args.inner_iters, "Inner Sinkhorn passes (ipot)");
    solve->add_option("--init", solve_args.init, "outer-product | uniform");

    // path
    std::string path_problem, path_out, path_csv;
    bool path_semi = false;
    int path_max_segments = 50000;
    auto* path = app.add_subcommand("path", "Compute the full regularization path");
    path->add_option("--problem", path_problem, "Problem file")->required();
    path->add_option("--out", path_out, "Output path file")->required();
    path->add_option("--csv", path_csv, "Breakpoints CSV (default: <out>.csv)");
    path->add_flag("--semi-relaxed", path_semi, "Exact column marginals");
    path->add_option("--max-segments", path_max_segments, "Segment cap");

    // eval-path
    std::string eval_path_file, eval_lambda, eval_out, eval_problem;
    auto* eval = app.add_subcommand("eval-path", "Evaluate a stored path at a lambda");
    eval->add_option("--path", eval_path_file, "Path file")->required();
    eval->add_option("--lambda", eval_lambda, "Positive number or 'inf'")->required();
    eval->add_option("--out", eval_out, "Output plan file");
    eval->add_option("--problem", eval_problem, "Problem file (verifies hash, prints cost)");

    // make-problem
    uot::Index mp_n = 10, mp_m = 10, mp_dim = 2, mp_outliers = 0;
    std::uint64_t mp_seed = 0;
    double mp_shift = 10.0;
    std::string mp_metric = "sqeuclidean", mp_out;
    auto* mk = app.add_subcommand("make-problem", "Sample a two-Gaussian problem");
    mk->add_option("--n", mp_n, "Source points");
    mk->add_option("--m", mp_m, "Target points");
    mk->add_option("--dim", mp_dim, "Ambient dimension");
    mk->add_option("--seed", mp_seed, "RNG seed");
    mk->add_option("--metric", mp_metric, "sqeuclidean | euclidean");
    mk->add_option("--outliers", mp_outliers, "Shifted target points");
    mk->add_option("--outlier-shift", mp_shift, "Shift distance");
    mk->add_option("--out", mp_out, "Output problem file")->required();

    // bench
    std::string bench_solver = "path", bench_sizes = "10,20,40,80", bench_out;
    int bench_repeats = 3;
    std::uint64_t bench_seed = 0;
    double bench_lambda = 1.0;
    auto* bench = app.add_subcommand("bench", "Timing sweep over problem sizes");
    bench->add_option("--solver", bench_solver, "path | mm-kl | mm-l2");
    bench->add_option("--sizes", bench_sizes, "Comma-separated n=m values, ascending");
    bench->add_option("--repeats", bench_repeats, "Repetitions per size");
    bench->add_option("--seed", bench_seed, "RNG seed");
    bench->add_option("--lambda", bench_lambda, "Penalty weight for mm solvers");
    bench->add_option("--out", bench_out, "Output CSV")->required();

    // check
    std::string check_problem, check_plan;
    double check_lambda = 1.0;
    bool check_semi = false;
    auto* check = app.add_subcommand("check", "KKT residuals of a stored plan");
    check->add_option("--problem", check_problem, "Problem file")->required();
    check->add_option("--plan", check_plan, "Plan file")->required();
    check->add_option("--lambda", check_lambda, "Penalty weight")->required();
    check->add_flag("--semi-relaxed", check_semi, "Use the semi-relaxed conditions");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (solve->parsed()) return run_solve(solve_args, lam_opt->count() > 0, l1_opt->count() > 0);
        if (path->parsed())
            return run_path(path_problem, path_out, path_csv, path_semi, path_max_segments);
        if (eval->parsed()) return run_eval_path(eval_path_file, eval_lambda, eval_out, eval_problem);
        if (mk->parsed()) {
            const uot::PointCloudProblem p = uot::gaussian_point_clouds(
                mp_n, mp_m, mp_dim, mp_seed, mp_metric, mp_outliers, mp_shift);
            uot::save_problem(mp_out, p);
            std::printf("wrote: %s\n", mp_out.c_str());
            return kExitOk;
        }
        if (bench->parsed()) {
            const auto records = uot::run_scaling(bench_solver, parse_sizes(bench_sizes),
                                                  bench_repeats, bench_seed, bench_lambda);
            uot::write_bench_csv(bench_out, records);
            std::vector<uot::Index> distinct;
            for (const auto& rec : records)
                if (distinct.empty() || distinct.back() != rec.n) distinct.push_back(rec.n);
            if (distinct.size() >= 4) {
                const uot::ExponentFit fit = uot::fit_exponent(records);
                std::printf("exponent: %.4f\n", fit.exponent);
                std::printf("r_squared: %.6f\n", fit.r_squared);
            }
            std::printf("records: %zu\n", records.size());
            return kExitOk;
        }
        if (check->parsed()) return run_check(check_problem, check_plan, check_lambda, check_semi);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
