#include "uot/ioformat.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>

namespace uot {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

json to_json(const Vector& v) {
    json arr = json::array();
    for (Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

json to_json(const Matrix& M) {
    json rows = json::array();
    for (Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Vector vector_from(const json& j, const std::string& field) {
    if (!j.is_array()) throw std::runtime_error("field '" + field + "' must be an array");
    Vector v(Index(j.size()));
    for (size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw std::runtime_error("field '" + field + "' has a non-numeric entry");
        v[Index(i)] = j[i].get<double>();
    }
    return v;
}

Matrix matrix_from(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) throw std::runtime_error("field '" + field + "' must be a non-empty array of rows");
    const size_t cols = j[0].size();
    Matrix M(Index(j.size()), Index(cols));
    for (size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array() || j[i].size() != cols)
            throw std::runtime_error("field '" + field + "' has ragged rows");
        for (size_t c = 0; c < cols; ++c) {
            if (!j[i][c].is_number())
                throw std::runtime_error("field '" + field + "' has a non-numeric entry");
            M(Index(i), Index(c)) = j[i][c].get<double>();
        }
    }
    return M;
}

json read_file(const std::string& path, const char* expected_type) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("parse error in '" + path + "': " + e.what());
    }
    if (!j.contains("format_version") || !j["format_version"].is_number_integer())
        throw std::runtime_error(path + ": missing field 'format_version'");
    if (j["format_version"].get<int>() > kFormatVersion)
        throw std::runtime_error(path + ": format_version " +
                                 std::to_string(j["format_version"].get<int>()) +
                                 " is newer than supported version " +
                                 std::to_string(kFormatVersion));
    if (!j.contains("type") || j["type"] != expected_type)
        throw std::runtime_error(path + ": expected type '" + expected_type + "'");
    return j;
}

void write_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

const json& required(const json& j, const std::string& field) {
    if (!j.contains(field)) throw std::runtime_error("missing field '" + field + "'");
    return j.at(field);
}

}  // namespace

Matrix cost_from_points(const Matrix& X, const Matrix& Y, const std::string& metric) {
    if (X.cols() != Y.cols())
        throw std::invalid_argument("cost_from_points: ambient dimensions differ");
    if (metric != "sqeuclidean" && metric != "euclidean")
        throw std::invalid_argument("cost_from_points: unknown metric '" + metric + "'");
    Matrix C(X.rows(), Y.rows());
    for (Index i = 0; i < X.rows(); ++i)
        for (Index j = 0; j < Y.rows(); ++j) {
            const double d2 = (X.row(i) - Y.row(j)).squaredNorm();
            C(i, j) = metric == "sqeuclidean" ? d2 : std::sqrt(d2);
        }
    return C;
}

Problem load_problem(const std::string& path) {
    const json j = read_file(path, "uot-problem");
    const Index n = required(j, "n").get<Index>();
    const Index m = required(j, "m").get<Index>();
    Problem p;
    p.a = vector_from(required(j, "a"), "a");
    p.b = vector_from(required(j, "b"), "b");
    if (p.a.size() != n) throw std::runtime_error("field 'a' has length inconsistent with n");
    if (p.b.size() != m) throw std::runtime_error("field 'b' has length inconsistent with m");

    const bool has_cost = j.contains("C");
    const bool has_points = j.contains("X") || j.contains("Y") || j.contains("metric");
    if (has_cost == has_points)
        throw std::runtime_error("problem file must contain exactly one of 'C' or 'X'/'Y'/'metric'");
    if (has_cost) {
        p.C = matrix_from(j.at("C"), "C");
    } else {
        const Matrix X = matrix_from(required(j, "X"), "X");
        const Matrix Y = matrix_from(required(j, "Y"), "Y");
        p.C = cost_from_points(X, Y, required(j, "metric").get<std::string>());
    }
    if (p.C.rows() != n || p.C.cols() != m)
        throw std::runtime_error("cost matrix shape inconsistent with n, m");
    validate_histogram(p.a, "a");
    validate_histogram(p.b, "b");
    validate_cost_matrix(p.C);
    return p;
}

void save_problem(const std::string& path, const Problem& problem) {
    validate_histogram(problem.a, "a");
    validate_histogram(problem.b, "b");
    validate_cost_matrix(problem.C);
    json j;
    j["format_version"] = kFormatVersion;
    j["type"] = "uot-problem";
    j["n"] = problem.C.rows();
    j["m"] = problem.C.cols();
    j["a"] = to_json(problem.a);
    j["b"] = to_json(problem.b);
    j["C"] = to_json(problem.C);
    write_file(path, j);
}

void save_problem(const std::string& path, const PointCloudProblem& problem) {
    validate_histogram(problem.a, "a");
    validate_histogram(problem.b, "b");
    if (problem.X.rows() != problem.a.size() || problem.Y.rows() != problem.b.size())
        throw std::invalid_argument("save_problem: point counts inconsistent with masses");
    json j;
    j["format_version"] = kFormatVersion;
    j["type"] = "uot-problem";
    j["n"] = problem.X.rows();
    j["m"] = problem.Y.rows();
    j["a"] = to_json(problem.a);
    j["b"] = to_json(problem.b);
    j["X"] = to_json(problem.X);
    j["Y"] = to_json(problem.Y);
    j["metric"] = problem.metric;
    write_file(path, j);
}

void save_plan(const std::string& path, const Matrix& plan) {
    validate_plan(plan);
    json j;
    j["format_version"] = kFormatVersion;
    j["type"] = "uot-plan";
    j["n"] = plan.rows();
    j["m"] = plan.cols();
    j["T"] = to_json(plan);
    write_file(path, j);
}

Matrix load_plan(const std::string& path) {
    const json j = read_file(path, "uot-plan");
    Matrix T = matrix_from(required(j, "T"), "T");
    if (T.rows() != required(j, "n").get<Index>() || T.cols() != required(j, "m").get<Index>())
        throw std::runtime_error("plan shape inconsistent with n, m");
    validate_plan(T);
    return T;
}

std::string problem_hash(const Problem& problem) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* data, size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (size_t k = 0; k < len; ++k) {
            h ^= p[k];
            h *= 1099511628211ull;
        }
    };
    const std::int64_t n = problem.C.rows(), m = problem.C.cols();
    mix(&n, sizeof(n));
    mix(&m, sizeof(m));
    mix(problem.a.data(), sizeof(double) * size_t(problem.a.size()));
    mix(problem.b.data(), sizeof(double) * size_t(problem.b.size()));
    for (Index i = 0; i < problem.C.rows(); ++i)
        for (Index j = 0; j < problem.C.cols(); ++j) mix(&problem.C(i, j), sizeof(double));
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void export_path(const std::string& file, const RegularizationPath& path,
                 const std::string& problem_hash) {
    json j;
    j["format_version"] = kFormatVersion;
    j["type"] = "uot-path";
    j["kind"] = path.semi_relaxed ? "semi-relaxed" : "full";
    j["n"] = path.n;
    j["m"] = path.m;
    j["problem_hash"] = problem_hash;
    j["terminal_balanced"] = path.terminal_balanced;
    j["complete"] = path.complete;
    json segments = json::array();
    for (const auto& seg : path.segments) {
        json s;
        s["lambda_lo"] = seg.lambda_lo;
        if (seg.unbounded()) s["lambda_hi"] = "inf";
        else s["lambda_hi"] = seg.lambda_hi;
        json active = json::array();
        for (const auto& q : seg.active.members) active.push_back(json::array({q.i, q.j}));
        s["active"] = std::move(active);
        s["m_tilde"] = to_json(seg.m_tilde);
        s["c_tilde"] = to_json(seg.c_tilde);
        if (path.semi_relaxed) {
            s["mult_m"] = to_json(seg.mult_m);
            s["mult_c"] = to_json(seg.mult_c);
        }
        segments.push_back(std::move(s));
    }
    j["segments"] = std::move(segments);
    write_file(file, j);
}

ImportedPath import_path(const std::string& file) {
    const json j = read_file(file, "uot-path");
    ImportedPath out;
    const std::string kind = required(j, "kind").get<std::string>();
    if (kind != "full" && kind != "semi-relaxed")
        throw std::runtime_error(file + ": unknown path kind '" + kind + "'");
    out.path.semi_relaxed = kind == "semi-relaxed";
    out.path.n = required(j, "n").get<Index>();
    out.path.m = required(j, "m").get<Index>();
    out.problem_hash = required(j, "problem_hash").get<std::string>();
    out.path.terminal_balanced = required(j, "terminal_balanced").get<bool>();
    out.path.complete = j.value("complete", true);
    for (const auto& s : required(j, "segments")) {
        PathSegment seg;
        seg.lambda_lo = required(s, "lambda_lo").get<double>();
        const auto& hi = required(s, "lambda_hi");
        if (hi.is_string()) {
            if (hi.get<std::string>() != "inf")
                throw std::runtime_error(file + ": lambda_hi must be a number or \"inf\"");
            seg.lambda_hi = std::numeric_limits<double>::infinity();
        } else {
            seg.lambda_hi = hi.get<double>();
        }
        for (const auto& q : required(s, "active")) {
            if (!q.is_array() || q.size() != 2)
                throw std::runtime_error(file + ": active entries must be [i, j] pairs");
            seg.active.members.push_back(
                make_flat_index(q[0].get<Index>(), q[1].get<Index>(), out.path.m));
        }
        seg.m_tilde = vector_from(required(s, "m_tilde"), "m_tilde");
        seg.c_tilde = vector_from(required(s, "c_tilde"), "c_tilde");
        if (seg.m_tilde.size() != seg.active.size() || seg.c_tilde.size() != seg.active.size())
            throw std::runtime_error(file + ": coefficient length differs from active set size");
        if (out.path.semi_relaxed) {
            seg.mult_m = vector_from(required(s, "mult_m"), "mult_m");
            seg.mult_c = vector_from(required(s, "mult_c"), "mult_c");
        }
        out.path.segments.push_back(std::move(seg));
    }
    if (out.path.segments.empty()) throw std::runtime_error(file + ": path has no segments");
    return out;
}

}  // namespace uot
