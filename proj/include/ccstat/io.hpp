#pragma once
// Artifact formats: JSON documents for problems, disturbance models,
// solutions, certification reports, and experiment configs; CSV tables for
// plotting; a flat binary container for sample sets.
//
// Every JSON document carries {"schema": 1, "kind": "<type>"}; loaders reject
// other versions or kinds.  Doubles are written in shortest round-trip form,
// so load(save(x)) reproduces x bit-for-bit.  Non-finite scalars serialize as
// JSON null.
//
// Sample binary layout (little-endian): 8-byte magic "CCSMPL01", then two
// uint64 fields (sample count, stacked dimension), then count*dim float64
// payload in row-major order.

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ccstat/concentration.hpp"
#include "ccstat/errors.hpp"
#include "ccstat/problem.hpp"
#include "ccstat/sampling.hpp"
#include "ccstat/solver.hpp"
#include "ccstat/verify.hpp"

namespace ccstat {

inline constexpr int kSchemaVersion = 1;
inline constexpr char kSampleMagic[8] = {'C', 'C', 'S', 'M', 'P', 'L', '0', '1'};

static_assert(std::endian::native == std::endian::little,
              "binary sample files are defined little-endian");

namespace detail {

inline std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    if (res.ec == std::errc{}) return std::string(buf, res.ptr);
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

inline nlohmann::json double_or_null(double value) {
    if (std::isfinite(value)) return value;
    return nullptr;
}

inline double double_from(const nlohmann::json& j) {
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    return j.get<double>();
}

inline nlohmann::json matrix_to_json(const MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline nlohmann::json vector_to_json(const VectorXd& v) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

inline MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& what) {
    if (!j.is_array() || j.empty())
        throw StructuralError("json-structure", what + " must be a non-empty array of rows");
    const std::size_t cols = j.front().is_array() ? j.front().size() : 0;
    if (cols == 0)
        throw StructuralError("json-structure", what + " rows must be non-empty arrays");
    MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    Eigen::Index r = 0;
    for (const auto& row : j) {
        if (!row.is_array() || row.size() != cols)
            throw StructuralError("json-structure", what + " is not rectangular");
        Eigen::Index c = 0;
        for (const auto& cell : row) m(r, c++) = cell.get<double>();
        ++r;
    }
    return m;
}

inline VectorXd vector_from_json(const nlohmann::json& j, const std::string& what) {
    if (!j.is_array())
        throw StructuralError("json-structure", what + " must be an array");
    VectorXd v(static_cast<Eigen::Index>(j.size()));
    Eigen::Index i = 0;
    for (const auto& cell : j) v(i++) = cell.get<double>();
    return v;
}

inline void require_schema(const nlohmann::json& j, const std::string& kind) {
    if (!j.is_object() || !j.contains("schema") || !j.contains("kind"))
        throw StructuralError("schema", "document lacks schema/kind tags");
    if (!j.at("schema").is_number_integer() ||
        j.at("schema").get<int>() != kSchemaVersion)
        throw StructuralError("schema", "unsupported schema version in " + kind +
                                            " document (expected " +
                                            std::to_string(kSchemaVersion) + ")");
    if (j.at("kind").get<std::string>() != kind)
        throw StructuralError("schema", "expected a '" + kind + "' document, found '" +
                                            j.at("kind").get<std::string>() + "'");
}

// Wraps extraction code so malformed content surfaces as StructuralError
// instead of a raw JSON library exception.
template <typename Fn>
auto guard_json(const std::string& what, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const nlohmann::json::exception& e) {
        throw StructuralError("json-structure", "malformed " + what + ": " + e.what());
    }
}

inline nlohmann::json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("file", "cannot open " + path.string() + " for reading");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError("json", "cannot parse " + path.string() + ": " + e.what());
    }
}

inline void save_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("file", "cannot open " + path.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("file", "failed writing " + path.string());
}

} // namespace detail

// ------------------------------------------------------------- problem ------

inline nlohmann::json problem_to_json(const ProblemSpec& p) {
    nlohmann::json j;
    j["schema"] = kSchemaVersion;
    j["kind"] = "problem";
    j["system"] = {{"A", detail::matrix_to_json(p.system.A)},
                   {"B", detail::matrix_to_json(p.system.B)}};
    j["horizon"] = p.horizon;
    j["x0"] = detail::vector_to_json(p.x0);
    j["input_box"] = {{"lo", detail::vector_to_json(p.inputLo)},
                      {"hi", detail::vector_to_json(p.inputHi)}};
    nlohmann::json targets = nlohmann::json::array();
    for (const auto& [step, poly] : p.target.perStep)
        targets.push_back({{"step", step},
                           {"G", detail::matrix_to_json(poly.G)},
                           {"h", detail::vector_to_json(poly.h)}});
    j["targets"] = std::move(targets);
    j["alpha"] = p.alpha;
    if (p.objectiveQ.size() != 0) j["objective"] = detail::matrix_to_json(p.objectiveQ);
    return j;
}

inline ProblemSpec problem_from_json(const nlohmann::json& j) {
    detail::require_schema(j, "problem");
    return detail::guard_json("problem", [&] {
        ProblemSpec p;
        p.system.A = detail::matrix_from_json(j.at("system").at("A"), "system.A");
        p.system.B = detail::matrix_from_json(j.at("system").at("B"), "system.B");
        p.horizon = j.at("horizon").get<int>();
        p.x0 = detail::vector_from_json(j.at("x0"), "x0");
        p.inputLo = detail::vector_from_json(j.at("input_box").at("lo"), "input_box.lo");
        p.inputHi = detail::vector_from_json(j.at("input_box").at("hi"), "input_box.hi");
        for (const auto& t : j.at("targets")) {
            const int step = t.at("step").get<int>();
            if (p.target.perStep.count(step))
                throw StructuralError("json-structure",
                                      "duplicate target step " + std::to_string(step));
            StepPolytope poly;
            poly.G = detail::matrix_from_json(t.at("G"), "target G");
            poly.h = detail::vector_from_json(t.at("h"), "target h");
            p.target.perStep[step] = std::move(poly);
        }
        p.alpha = j.at("alpha").get<double>();
        if (j.contains("objective"))
            p.objectiveQ = detail::matrix_from_json(j.at("objective"), "objective");
        return p;
    });
}

inline void save_problem(const std::filesystem::path& path, const ProblemSpec& p) {
    detail::save_text_file(path, problem_to_json(p).dump(2) + "\n");
}

inline ProblemSpec load_problem(const std::filesystem::path& path) {
    return problem_from_json(detail::load_json_file(path));
}

// --------------------------------------------------------------- model ------

inline nlohmann::json model_to_json(const GaussianModel& m) {
    nlohmann::json j;
    j["schema"] = kSchemaVersion;
    j["kind"] = "model";
    j["mean"] = detail::vector_to_json(m.mean);
    j["covariance"] = detail::matrix_to_json(m.covariance);
    j["seed"] = m.seed;
    return j;
}

inline GaussianModel model_from_json(const nlohmann::json& j) {
    detail::require_schema(j, "model");
    return detail::guard_json("model", [&] {
        GaussianModel m;
        m.mean = detail::vector_from_json(j.at("mean"), "mean");
        const auto& cov = j.at("covariance");
        if (cov.is_object()) {
            // Shorthand: one block tiled along the diagonal.
            const MatrixXd block =
                detail::matrix_from_json(cov.at("block_diag_repeat"), "covariance block");
            const auto repeat = cov.at("repeat").get<std::int64_t>();
            if (block.rows() != block.cols())
                throw StructuralError("json-structure", "covariance block must be square");
            if (repeat < 1)
                throw StructuralError("json-structure", "covariance repeat must be >= 1");
            const Eigen::Index dim = block.rows() * static_cast<Eigen::Index>(repeat);
            m.covariance = MatrixXd::Zero(dim, dim);
            for (std::int64_t r = 0; r < repeat; ++r)
                m.covariance.block(r * block.rows(), r * block.rows(), block.rows(),
                                   block.rows()) = block;
        } else {
            m.covariance = detail::matrix_from_json(cov, "covariance");
        }
        if (m.covariance.rows() != m.mean.size())
            throw StructuralError("json-structure",
                                  "covariance dimension " + std::to_string(m.covariance.rows()) +
                                      " does not match mean dimension " +
                                      std::to_string(m.mean.size()));
        m.seed = j.value("seed", std::uint64_t{0});
        return m;
    });
}

inline void save_model(const std::filesystem::path& path, const GaussianModel& m) {
    detail::save_text_file(path, model_to_json(m).dump(2) + "\n");
}

inline GaussianModel load_model(const std::filesystem::path& path) {
    return model_from_json(detail::load_json_file(path));
}

// ------------------------------------------------------------- solution -----

inline SolveStatus status_from_string(const std::string& s) {
    if (s == "optimal") return SolveStatus::Optimal;
    if (s == "infeasible") return SolveStatus::Infeasible;
    if (s == "iteration-limit") return SolveStatus::IterLimit;
    throw StructuralError("status", "unknown solve status '" + s + "'");
}

inline nlohmann::json solution_to_json(const Solution& sol) {
    nlohmann::json j;
    j["schema"] = kSchemaVersion;
    j["kind"] = "solution";
    j["U"] = detail::vector_to_json(sol.U);
    j["lambda"] = detail::vector_to_json(sol.lambda);
    j["cost"] = detail::double_or_null(sol.cost);
    j["status"] = to_string(sol.status);
    j["residuals"] = {{"primal", detail::double_or_null(sol.kkt.primal)},
                      {"stationarity", detail::double_or_null(sol.kkt.stationarity)},
                      {"complementarity", detail::double_or_null(sol.kkt.complementarity)}};
    j["solve_seconds"] = detail::double_or_null(sol.solveSeconds);
    j["outer_objectives"] = sol.outerObjectives;
    if (!sol.mostViolated.empty()) j["most_violated"] = sol.mostViolated;
    return j;
}

inline Solution solution_from_json(const nlohmann::json& j) {
    detail::require_schema(j, "solution");
    return detail::guard_json("solution", [&] {
        Solution sol;
        sol.U = detail::vector_from_json(j.at("U"), "U");
        sol.lambda = detail::vector_from_json(j.at("lambda"), "lambda");
        sol.cost = detail::double_from(j.at("cost"));
        sol.status = status_from_string(j.at("status").get<std::string>());
        const auto& res = j.at("residuals");
        sol.kkt.primal = detail::double_from(res.at("primal"));
        sol.kkt.stationarity = detail::double_from(res.at("stationarity"));
        sol.kkt.complementarity = detail::double_from(res.at("complementarity"));
        sol.solveSeconds = detail::double_from(j.at("solve_seconds"));
        sol.outerObjectives = j.value("outer_objectives", std::vector<double>{});
        sol.mostViolated = j.value("most_violated", std::string{});
        return sol;
    });
}

inline void save_solution(const std::filesystem::path& path, const Solution& sol) {
    detail::save_text_file(path, solution_to_json(sol).dump(2) + "\n");
}

inline Solution load_solution(const std::filesystem::path& path) {
    return solution_from_json(detail::load_json_file(path));
}

// -------------------------------------------------------- certification -----

inline nlohmann::json certification_to_json(const CertificationReport& r) {
    nlohmann::json j;
    j["schema"] = kSchemaVersion;
    j["kind"] = "certification";
    j["trials"] = r.trials;
    j["joint_satisfaction"] = r.jointSatisfaction;
    j["standard_error"] = r.standardError;
    j["seed"] = r.seed;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& [key, rate] : r.perRowViolation)
        rows.push_back({{"step", key.first}, {"row", key.second}, {"rate", rate}});
    j["per_row_violation"] = std::move(rows);
    return j;
}

inline CertificationReport certification_from_json(const nlohmann::json& j) {
    detail::require_schema(j, "certification");
    return detail::guard_json("certification", [&] {
        CertificationReport r;
        r.trials = j.at("trials").get<std::int64_t>();
        r.jointSatisfaction = j.at("joint_satisfaction").get<double>();
        r.standardError = j.at("standard_error").get<double>();
        r.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& row : j.at("per_row_violation"))
            r.perRowViolation[{row.at("step").get<int>(), row.at("row").get<int>()}] =
                row.at("rate").get<double>();
        return r;
    });
}

inline void save_certification(const std::filesystem::path& path,
                               const CertificationReport& r) {
    detail::save_text_file(path, certification_to_json(r).dump(2) + "\n");
}

inline CertificationReport load_certification(const std::filesystem::path& path) {
    return certification_from_json(detail::load_json_file(path));
}

// One row per (step, row) violation rate, for plotting.
inline void write_certification_csv(std::ostream& out, const CertificationReport& r) {
    out << "step,row,rate\n";
    for (const auto& [key, rate] : r.perRowViolation)
        out << key.first << ',' << key.second << ',' << detail::format_double(rate) << '\n';
}

inline void save_certification_csv(const std::filesystem::path& path,
                                   const CertificationReport& r) {
    std::ostringstream ss;
    write_certification_csv(ss, r);
    detail::save_text_file(path, ss.str());
}

// ------------------------------------------------------------- samples ------

inline void save_samples_binary(const std::filesystem::path& path, const SampleSet& set) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("file", "cannot open " + path.string() + " for writing");
    out.write(kSampleMagic, sizeof(kSampleMagic));
    const std::uint64_t count = static_cast<std::uint64_t>(set.count());
    const std::uint64_t dim = static_cast<std::uint64_t>(set.dim());
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
    std::vector<double> rowMajor(static_cast<std::size_t>(set.count() * set.dim()));
    for (Eigen::Index r = 0; r < set.count(); ++r)
        for (Eigen::Index c = 0; c < set.dim(); ++c)
            rowMajor[static_cast<std::size_t>(r * set.dim() + c)] = set.matrix()(r, c);
    out.write(reinterpret_cast<const char*>(rowMajor.data()),
              static_cast<std::streamsize>(rowMajor.size() * sizeof(double)));
    out.flush();
    if (!out) throw IoError("file", "failed writing " + path.string());
}

// Loads a binary sample container.  Sets with at least two samples pass
// through the degenerate-set gate; a single-sample set loads ungated (it is
// legitimate input for the scenario method and carries no statistics).
inline SampleSet load_samples_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("file", "cannot open " + path.string() + " for reading");
    char magic[sizeof(kSampleMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kSampleMagic, sizeof(magic)) != 0)
        throw StructuralError("samples-binary",
                              path.string() + " is not a sample container (bad magic)");
    std::uint64_t count = 0, dim = 0;
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
    if (!in || count < 1 || dim < 1 || count > (1ull << 32) || dim > (1ull << 24) ||
        count * dim > (1ull << 33))
        throw StructuralError("samples-binary",
                              path.string() + " header declares an invalid shape");
    std::vector<double> payload(static_cast<std::size_t>(count * dim));
    in.read(reinterpret_cast<char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != payload.size() * sizeof(double))
        throw StructuralError("samples-binary", path.string() + " payload is truncated");
    in.peek();
    if (!in.eof())
        throw StructuralError("samples-binary",
                              path.string() + " has trailing bytes after the payload");
    MatrixXd m(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
    for (std::uint64_t r = 0; r < count; ++r)
        for (std::uint64_t c = 0; c < dim; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                payload[static_cast<std::size_t>(r * dim + c)];
    if (count == 1) return SampleSet::unchecked(std::move(m));
    return SampleSet::from_samples(std::move(m));
}

inline void write_samples_csv(std::ostream& out, const SampleSet& set) {
    out << "count,dim\n" << set.count() << ',' << set.dim() << '\n';
    for (Eigen::Index r = 0; r < set.count(); ++r) {
        for (Eigen::Index c = 0; c < set.dim(); ++c) {
            if (c) out << ',';
            out << detail::format_double(set.matrix()(r, c));
        }
        out << '\n';
    }
}

inline void save_samples_csv(const std::filesystem::path& path, const SampleSet& set) {
    std::ostringstream ss;
    write_samples_csv(ss, set);
    detail::save_text_file(path, ss.str());
}

inline SampleSet read_samples_csv(std::istream& in, const std::string& name) {
    auto next_line = [&](std::string& line) {
        if (!std::getline(in, line))
            throw StructuralError("samples-csv", name + " ended unexpectedly");
        if (!line.empty() && line.back() == '\r') line.pop_back();
    };
    std::string line;
    next_line(line);
    if (line != "count,dim")
        throw StructuralError("samples-csv", name + " lacks the 'count,dim' header");
    next_line(line);
    char* shapeEnd = nullptr;
    const std::int64_t count = std::strtoll(line.c_str(), &shapeEnd, 10);
    std::int64_t dim = 0;
    if (shapeEnd != line.c_str() && *shapeEnd == ',')
        dim = std::strtoll(shapeEnd + 1, &shapeEnd, 10);
    if (count < 1 || dim < 1 || *shapeEnd != '\0')
        throw StructuralError("samples-csv", name + " has an invalid shape line '" + line + "'");
    MatrixXd m(count, dim);
    for (std::int64_t r = 0; r < count; ++r) {
        next_line(line);
        const char* cursor = line.c_str();
        for (std::int64_t c = 0; c < dim; ++c) {
            char* end = nullptr;
            const double v = std::strtod(cursor, &end);
            if (end == cursor)
                throw StructuralError("samples-csv", name + " row " + std::to_string(r) +
                                                         " is malformed");
            m(r, c) = v;
            cursor = end;
            if (c + 1 < dim) {
                if (*cursor != ',')
                    throw StructuralError("samples-csv",
                                          name + " row " + std::to_string(r) +
                                              " has too few fields");
                ++cursor;
            }
        }
        while (*cursor == ' ') ++cursor;
        if (*cursor != '\0')
            throw StructuralError("samples-csv", name + " row " + std::to_string(r) +
                                                     " has trailing fields");
    }
    if (count == 1) return SampleSet::unchecked(std::move(m));
    return SampleSet::from_samples(std::move(m));
}

inline SampleSet load_samples_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("file", "cannot open " + path.string() + " for reading");
    return read_samples_csv(in, path.string());
}

// ----------------------------------------------------------- trajectory -----

// Mean trajectory under the plan U and the sample-mean disturbance, with a
// per-coordinate standard-deviation envelope from the sample covariance.
// Columns: k, x1..xn, std_x1..std_xn; k = 0 is the fixed initial state.
inline void write_trajectory_csv(std::ostream& out, const ProblemSpec& problem,
                                 const VectorXd& U, const SampleStatistics& stats) {
    const ConcatenatedDynamics cd = concatenate(problem.system, problem.horizon);
    const Eigen::Index wdim = cd.horizon() * cd.n();
    if (stats.mean.size() != wdim || stats.covariance.rows() != wdim ||
        stats.covariance.cols() != wdim)
        throw StructuralError("shape", "disturbance statistics dimension " +
                                           std::to_string(stats.mean.size()) +
                                           " does not match " + std::to_string(wdim));
    out << 'k';
    for (Eigen::Index jx = 1; jx <= cd.n(); ++jx) out << ",x" << jx;
    for (Eigen::Index jx = 1; jx <= cd.n(); ++jx) out << ",std_x" << jx;
    out << '\n';
    out << 0;
    for (Eigen::Index jx = 0; jx < cd.n(); ++jx)
        out << ',' << detail::format_double(problem.x0(jx));
    for (Eigen::Index jx = 0; jx < cd.n(); ++jx) out << ",0";
    out << '\n';
    for (int k = 1; k <= cd.horizon(); ++k) {
        const VectorXd mean = propagate_mean(cd, problem.x0, U, stats.mean, k);
        const MatrixXd spread = cd.D(k) * stats.covariance * cd.D(k).transpose();
        out << k;
        for (Eigen::Index jx = 0; jx < cd.n(); ++jx)
            out << ',' << detail::format_double(mean(jx));
        for (Eigen::Index jx = 0; jx < cd.n(); ++jx)
            out << ',' << detail::format_double(std::sqrt(std::max(0.0, spread(jx, jx))));
        out << '\n';
    }
}

inline void save_trajectory_csv(const std::filesystem::path& path, const ProblemSpec& problem,
                                const VectorXd& U, const SampleStatistics& stats) {
    std::ostringstream ss;
    write_trajectory_csv(ss, problem, U, stats);
    detail::save_text_file(path, ss.str());
}

// -------------------------------------------------------------- summary -----

struct SummaryRow {
    std::string method;
    double cost = 0.0;
    double solveSeconds = 0.0;
    double satisfaction = 0.0;
};

inline void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
    out << "method,cost,solve_seconds,satisfaction\n";
    for (const auto& row : rows)
        out << row.method << ',' << detail::format_double(row.cost) << ','
            << detail::format_double(row.solveSeconds) << ','
            << detail::format_double(row.satisfaction) << '\n';
}

inline void save_summary_csv(const std::filesystem::path& path,
                             const std::vector<SummaryRow>& rows) {
    std::ostringstream ss;
    write_summary_csv(ss, rows);
    detail::save_text_file(path, ss.str());
}

// ---------------------------------------------------------- bound table -----

// Tail-bound curves on a shared lambda grid: one column per sample count plus
// the infinite-sample limit column.  Cells below a curve's validity threshold
// are left empty; a preamble comment documents each curve's threshold and
// inflection point.
inline void write_bound_table(std::ostream& out, const std::vector<std::int64_t>& sampleCounts,
                              const std::vector<double>& lambdas) {
    if (sampleCounts.empty() || lambdas.empty())
        throw StructuralError("bound-table", "sample-count and lambda grids must be non-empty");
    for (const double lambda : lambdas)
        if (!(lambda > 0.0))
            throw GateError("lambda-domain", "lambda grid entries must be positive, got " +
                                                 detail::format_double(lambda));
    std::vector<BoundContext> contexts;
    contexts.reserve(sampleCounts.size());
    for (const auto ns : sampleCounts) contexts.emplace_back(ns);

    for (const auto& ctx : contexts)
        out << "# ns=" << ctx.ns << " lambda_min=" << detail::format_double(lambda_min(ctx))
            << " theta=" << detail::format_double(inflection_theta(ctx)) << '\n';
    out << "# ns=inf lambda_min=" << detail::format_double(osvpi_lambda_floor())
        << " theta=" << detail::format_double(1.0 / std::sqrt(3.0)) << '\n';
    out << "lambda";
    for (const auto& ctx : contexts) out << ",f_ns" << ctx.ns;
    out << ",f_inf\n";
    for (const double lambda : lambdas) {
        out << detail::format_double(lambda);
        for (const auto& ctx : contexts) {
            out << ',';
            if (lambda > lambda_min(ctx)) out << detail::format_double(f(ctx, lambda));
        }
        out << ',';
        if (lambda > osvpi_lambda_floor()) out << detail::format_double(osvpi_bound(lambda));
        out << '\n';
    }
}

inline void save_bound_table(const std::filesystem::path& path,
                             const std::vector<std::int64_t>& sampleCounts,
                             const std::vector<double>& lambdas) {
    std::ostringstream ss;
    write_bound_table(ss, sampleCounts, lambdas);
    detail::save_text_file(path, ss.str());
}

// ------------------------------------------------------------ experiment ----

// Disturbance-sample source: either generate from a model file or load a
// sample container.
struct SampleSource {
    bool generate = false;
    std::string modelPath; // generate mode
    std::int64_t count = 0;
    std::uint64_t seed = 0;
    std::string loadPath; // load mode
};

struct CertifySettings {
    std::int64_t trials = 100000;
    std::uint64_t seed = 0;
};

// Batch experiment description consumed by the command-line `run` operation.
struct ExperimentConfig {
    std::string problemPath;
    std::string method; // proposed | scenario | osvpi
    SampleSource samples;
    CertifySettings certify;
    std::string outputDir;

    void validate() const {
        if (problemPath.empty())
            throw StructuralError("config", "missing problem path");
        if (method != "proposed" && method != "scenario" && method != "osvpi")
            throw StructuralError("config", "unknown method '" + method +
                                                "' (expected proposed, scenario, or osvpi)");
        const bool loads = !samples.loadPath.empty();
        if (samples.generate == loads)
            throw StructuralError("config",
                                  "exactly one of samples.generate / samples.load is required");
        if (samples.generate) {
            if (samples.modelPath.empty())
                throw StructuralError("config", "samples.generate requires a model path");
            if (samples.count < 1)
                throw StructuralError("config", "samples.generate requires N_s >= 1");
        }
        if (method == "osvpi" && !samples.generate)
            throw StructuralError("config",
                                  "the known-moments method takes its moments from a model; "
                                  "use samples.generate with a model path");
        if (certify.trials < 1)
            throw StructuralError("config", "certify.trials must be >= 1");
        if (outputDir.empty())
            throw StructuralError("config", "missing output directory");
    }
};

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["schema"] = kSchemaVersion;
    j["kind"] = "config";
    j["problem"] = c.problemPath;
    j["method"] = c.method;
    if (c.samples.generate)
        j["samples"] = {{"generate",
                         {{"model", c.samples.modelPath},
                          {"N_s", c.samples.count},
                          {"seed", c.samples.seed}}}};
    else
        j["samples"] = {{"load", c.samples.loadPath}};
    j["certify"] = {{"trials", c.certify.trials}, {"seed", c.certify.seed}};
    j["output"] = c.outputDir;
    return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    detail::require_schema(j, "config");
    return detail::guard_json("config", [&] {
        ExperimentConfig c;
        c.problemPath = j.at("problem").get<std::string>();
        c.method = j.at("method").get<std::string>();
        const auto& samples = j.at("samples");
        const bool hasGenerate = samples.contains("generate");
        const bool hasLoad = samples.contains("load");
        if (hasGenerate == hasLoad)
            throw StructuralError("config",
                                  "exactly one of samples.generate / samples.load is required");
        if (hasGenerate) {
            const auto& g = samples.at("generate");
            c.samples.generate = true;
            c.samples.modelPath = g.at("model").get<std::string>();
            c.samples.count = g.at("N_s").get<std::int64_t>();
            c.samples.seed = g.value("seed", std::uint64_t{0});
        } else {
            c.samples.loadPath = samples.at("load").get<std::string>();
        }
        if (j.contains("certify")) {
            c.certify.trials = j.at("certify").value("trials", std::int64_t{100000});
            c.certify.seed = j.at("certify").value("seed", std::uint64_t{0});
        }
        c.outputDir = j.at("output").get<std::string>();
        c.validate();
        return c;
    });
}

inline void save_config(const std::filesystem::path& path, const ExperimentConfig& c) {
    detail::save_text_file(path, config_to_json(c).dump(2) + "\n");
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    return config_from_json(detail::load_json_file(path));
}

} // namespace ccstat
