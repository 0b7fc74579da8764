#pragma once

// CSV logs, per-run reports and the three-way controller comparison.

#include <blfarm/monitor.hpp>
#include <blfarm/scenario_io.hpp>
#include <blfarm/sim.hpp>

#include <json.hpp>

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace blfarm {

inline constexpr double kSettlingTolerance = 1e-2;  // rad, on ||e||

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,  // completed run whose Lyapunov verdict failed, or divergence
    kExitViolation = 2,
    kExitValidation = 3,
    kExitIo = 4,
};

// ---------------------------------------------------------------------------
// CSV

inline std::vector<std::string> csv_columns(int n, int p) {
    std::vector<std::string> cols{"t"};
    for (const char* prefix : {"q", "qd", "e", "r", "tau"}) {
        for (int i = 1; i <= n; ++i) cols.push_back(prefix + std::to_string(i));
    }
    for (int i = 1; i <= p; ++i) cols.push_back("thetahat" + std::to_string(i));
    cols.push_back("V");
    return cols;
}

namespace detail {
inline void append_number(std::string& line, double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    line += buf;
}
}  // namespace detail

inline void write_csv(std::ostream& out, const RunLog& log, int n, int p) {
    const auto cols = csv_columns(n, p);
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    std::string line;
    for (const LogRecord& rec : log.records) {
        line.clear();
        detail::append_number(line, rec.t);
        for (const JointVec* v : {&rec.q, &rec.qd, &rec.e, &rec.r, &rec.tau}) {
            for (Eigen::Index i = 0; i < v->size(); ++i) {
                line += ',';
                detail::append_number(line, (*v)(i));
            }
        }
        for (Eigen::Index i = 0; i < rec.theta_hat.size(); ++i) {
            line += ',';
            detail::append_number(line, rec.theta_hat(i));
        }
        line += ',';
        detail::append_number(line, rec.V);
        out << line << '\n';
    }
}

inline void write_csv(const std::filesystem::path& path, const RunLog& log, int n, int p) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    write_csv(out, log, n, p);
    if (!out) throw IoError("write failed: " + path.string());
}

/// Parses a CSV produced by write_csv. Joint and parameter counts are taken
/// from the header.
inline std::vector<LogRecord> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty CSV");
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    int n = 0, p = 0;
    for (const std::string& h : header) {
        if (h.size() > 1 && h[0] == 'q' && std::isdigit(static_cast<unsigned char>(h[1]))) ++n;
        if (h.rfind("thetahat", 0) == 0) ++p;
    }
    if (header != csv_columns(n, p)) throw ParseError("unexpected CSV header");

    std::vector<LogRecord> records;
    const std::size_t width = header.size();
    std::vector<double> row(width);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const char* cur = line.c_str();
        for (std::size_t i = 0; i < width; ++i) {
            char* end = nullptr;
            row[i] = std::strtod(cur, &end);
            if (end == cur) throw ParseError("malformed CSV row: " + line);
            cur = end;
            if (i + 1 < width) {
                if (*cur != ',') throw ParseError("malformed CSV row: " + line);
                ++cur;
            }
        }
        LogRecord rec;
        std::size_t at = 0;
        rec.t = row[at++];
        for (JointVec* v : {&rec.q, &rec.qd, &rec.e, &rec.r, &rec.tau}) {
            v->resize(n);
            for (int i = 0; i < n; ++i) (*v)(i) = row[at++];
        }
        rec.theta_hat.resize(p);
        for (int i = 0; i < p; ++i) rec.theta_hat(i) = row[at++];
        rec.V = row[at++];
        records.push_back(std::move(rec));
    }
    return records;
}

inline std::vector<LogRecord> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return read_csv(in);
}

// ---------------------------------------------------------------------------
// Reports

/// Earliest logged time after which ||e|| stays below `tol` for the rest of
/// the log; empty if the last record is still outside.
inline std::optional<double> settling_time(const std::vector<LogRecord>& records, double tol = kSettlingTolerance) {
    std::optional<double> t;
    for (auto it = records.rbegin(); it != records.rend(); ++it) {
        if (!(it->e.norm() < tol)) break;
        t = it->t;
    }
    return t;
}

struct RunReport {
    std::string scenario;
    BarrierKind kind = BarrierKind::log;
    Outcome outcome = Outcome::completed;
    std::optional<ViolationEvent> violation;
    long long diverged_step = -1;
    std::size_t rows = 0;
    JointVec max_abs_e;
    JointVec delta;
    JointVec margin;  // delta_i - max |e_i|
    JointVec ratio;   // max |e_i| / delta_i
    std::optional<double> settling;
    MonitorVerdict verdict;
    std::optional<double> beta;
    double max_tau_norm = 0.0;
    double max_theta_hat_norm = 0.0;
    double final_e_norm = 0.0;
    std::string csv_file;

    bool success() const { return outcome == Outcome::completed && verdict.pass; }

    int exit_code() const {
        if (outcome == Outcome::violation) return kExitViolation;
        return success() ? kExitOk : kExitFailure;
    }
};

inline RunReport make_report(const Scenario& sc, const RunLog& log, const MonitorVerdict& verdict) {
    RunReport rep;
    rep.scenario = sc.name;
    rep.kind = log.kind;
    rep.outcome = log.outcome;
    rep.violation = log.violation;
    rep.diverged_step = log.diverged_step;
    rep.rows = log.records.size();
    rep.max_abs_e = log.summary.max_abs_e;
    rep.delta = sc.cfg.delta;
    rep.margin = rep.delta - rep.max_abs_e;
    rep.ratio = rep.max_abs_e.cwiseQuotient(rep.delta);
    if (log.outcome == Outcome::completed) rep.settling = settling_time(log.records);
    rep.verdict = verdict;
    rep.beta = verdict.beta;
    rep.max_tau_norm = log.summary.max_tau_norm;
    rep.max_theta_hat_norm = log.summary.max_theta_hat_norm;
    rep.final_e_norm = log.summary.final_e_norm;
    return rep;
}

inline json to_json(const MonitorVerdict& v) {
    json j = {{"pass", v.pass},
              {"decrease_ok", v.decrease_ok},
              {"decrease_failures", v.decrease_failures},
              {"max_increase", v.max_increase},
              {"rate_checked", v.rate_checked},
              {"rate_ok", v.rate_ok},
              {"rate_failures", v.rate_failures},
              {"rate_satisfied_fraction", v.rate_satisfied_fraction},
              {"steps", v.steps},
              {"scale", v.scale},
              {"note", v.note}};
    j["beta"] = v.beta ? json(*v.beta) : json(nullptr);
    return j;
}

inline json to_json(const RunReport& r) {
    json j = {{"scenario", r.scenario},
              {"controller", std::string(to_string(r.kind))},
              {"outcome", std::string(to_string(r.outcome))},
              {"rows", r.rows},
              {"max_abs_e", detail::to_array(r.max_abs_e)},
              {"delta", detail::to_array(r.delta)},
              {"delta_margin", detail::to_array(r.margin)},
              {"max_abs_e_over_delta", detail::to_array(r.ratio)},
              {"settling_tolerance", kSettlingTolerance},
              {"max_tau_norm", r.max_tau_norm},
              {"max_theta_hat_norm", r.max_theta_hat_norm},
              {"final_e_norm", r.final_e_norm},
              {"lyapunov", to_json(r.verdict)},
              {"csv", r.csv_file},
              {"exit_code", r.exit_code()}};
    j["settling_time"] = r.settling ? json(*r.settling) : json(nullptr);
    j["beta"] = r.beta ? json(*r.beta) : json(nullptr);
    if (r.violation) {
        j["violation"] = {{"time", r.violation->time},
                          {"joint", r.violation->joint + 1},
                          {"stage", r.violation->stage},
                          {"step", r.violation->step},
                          {"error", r.violation->error}};
    } else {
        j["violation"] = nullptr;
    }
    if (r.diverged_step >= 0) j["diverged_step"] = r.diverged_step;
    return j;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

inline std::string run_basename(const Scenario& sc, BarrierKind kind) {
    return sc.name + "_" + std::string(to_string(kind));
}

struct RunOutput {
    RunReport report;
    RunLog log;
};

/// Runs one controller, monitors it, writes <scenario>_<controller>.csv and
/// <scenario>_<controller>_report.json into out_dir.
inline RunOutput run_and_report(const Scenario& base, BarrierKind kind, const std::filesystem::path& out_dir) {
    Scenario sc = base;
    sc.cfg.kind = kind;
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

    RunOutput out;
    out.log = run(sc);
    const MonitorResult mon = monitor_run(out.log, sc, kind);
    out.report = make_report(sc, out.log, mon.verdict);

    const std::filesystem::path csv = out_dir / (run_basename(sc, kind) + ".csv");
    write_csv(csv, out.log, sc.params.n, sc.params.p());
    out.report.csv_file = csv.filename().string();
    write_json(out_dir / (run_basename(sc, kind) + "_report.json"), to_json(out.report));
    return out;
}

struct ComparisonReport {
    std::string scenario;
    std::vector<RunReport> rows;  // log, tan, baseline

    const RunReport& row(BarrierKind kind) const {
        for (const RunReport& r : rows) {
            if (r.kind == kind) return r;
        }
        throw std::out_of_range("no row for controller");
    }

    /// Zero when both barrier controllers completed with a passing verdict;
    /// a violating baseline is not an error.
    int exit_code() const {
        int code = kExitOk;
        for (const RunReport& r : rows) {
            if (r.kind == BarrierKind::baseline) continue;
            if (r.outcome == Outcome::violation) return kExitViolation;
            if (!r.success()) code = kExitFailure;
        }
        return code;
    }
};

inline std::string format_optional(const std::optional<double>& v) {
    if (!v) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", *v);
    return buf;
}

/// Plain-text comparison table, one row per controller.
inline std::string comparison_table(const ComparisonReport& rep) {
    std::ostringstream os;
    os << "scenario " << rep.scenario << " (settling tolerance ||e|| < " << kSettlingTolerance << " rad)\n";
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-9s %-10s %-22s %-10s %-10s %-8s %-12s\n", "kind", "outcome", "max|e_i|/delta_i",
                  "settle[s]", "beta", "lyap", "max|tau|");
    os << buf;
    for (const RunReport& r : rep.rows) {
        std::string ratio;
        for (Eigen::Index i = 0; i < r.ratio.size(); ++i) {
            char cell[32];
            std::snprintf(cell, sizeof cell, "%s%.4f", i ? " " : "", r.ratio(i));
            ratio += cell;
        }
        std::snprintf(buf, sizeof buf, "%-9s %-10s %-22s %-10s %-10s %-8s %-12.6g\n",
                      std::string(to_string(r.kind)).c_str(), std::string(to_string(r.outcome)).c_str(),
                      ratio.c_str(), format_optional(r.settling).c_str(), format_optional(r.beta).c_str(),
                      r.verdict.pass ? "PASS" : "FAIL", r.max_tau_norm);
        os << buf;
    }
    return os.str();
}

inline void write_comparison_csv(const std::filesystem::path& path, const ComparisonReport& rep) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "controller,outcome";
    const Eigen::Index n = rep.rows.empty() ? 0 : rep.rows.front().ratio.size();
    for (Eigen::Index i = 1; i <= n; ++i) out << ",max_abs_e" << i << "_over_delta";
    out << ",settling_time,beta,lyapunov_pass,max_tau_norm,violation_time\n";
    for (const RunReport& r : rep.rows) {
        std::string line = std::string(to_string(r.kind)) + "," + std::string(to_string(r.outcome));
        for (Eigen::Index i = 0; i < r.ratio.size(); ++i) {
            line += ',';
            detail::append_number(line, r.ratio(i));
        }
        line += ',';
        if (r.settling) detail::append_number(line, *r.settling);
        line += ',';
        if (r.beta) detail::append_number(line, *r.beta);
        line += r.verdict.pass ? ",1," : ",0,";
        detail::append_number(line, r.max_tau_norm);
        line += ',';
        if (r.violation) detail::append_number(line, r.violation->time);
        out << line << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

/// Runs log, tan and baseline on the same scenario (concurrently) and
/// tabulates them. Writes the three per-run outputs plus
/// <scenario>_comparison.csv / .json / .txt.
inline ComparisonReport compare_controllers(const Scenario& sc, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

    const BarrierKind kinds[] = {BarrierKind::log, BarrierKind::tan, BarrierKind::baseline};
    std::vector<std::future<RunOutput>> jobs;
    for (BarrierKind kind : kinds) {
        jobs.push_back(std::async(std::launch::async, [&sc, &out_dir, kind] { return run_and_report(sc, kind, out_dir); }));
    }
    ComparisonReport rep;
    rep.scenario = sc.name;
    for (auto& job : jobs) rep.rows.push_back(job.get().report);

    write_comparison_csv(out_dir / (sc.name + "_comparison.csv"), rep);
    json j = {{"scenario", sc.name}, {"settling_tolerance", kSettlingTolerance}, {"exit_code", rep.exit_code()}};
    j["controllers"] = json::array();
    for (const RunReport& r : rep.rows) j["controllers"].push_back(to_json(r));
    write_json(out_dir / (sc.name + "_comparison.json"), j);
    std::ofstream(out_dir / (sc.name + "_comparison.txt")) << comparison_table(rep);
    return rep;
}

}  // namespace blfarm
