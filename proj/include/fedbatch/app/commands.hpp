#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fedbatch/app/pipeline.hpp"
#include "fedbatch/io/report.hpp"

namespace fedbatch::app {

/// Files produced by a command, kept in memory until every computation is done.
struct Outputs {
    std::vector<std::pair<std::string, std::string>> files;

    void add(std::string name, std::string content) { files.emplace_back(std::move(name), std::move(content)); }
    void add_json(std::string name, const io::json& j) { add(std::move(name), io::dump17(j)); }
    const std::string* find(const std::string& name) const {
        for (const auto& [n, c] : files) {
            if (n == name) return &c;
        }
        return nullptr;
    }
};

inline void write_outputs(const Outputs& out, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
    for (const auto& [name, content] : out.files) io::write_text_file((dir / name).string(), content);
}

inline ScanOptions scan_options(const io::RunConfig& c) {
    ScanOptions s;
    s.grid_points = c.inspect.grid_points;
    return s;
}

inline Outputs cmd_inspect(const io::RunConfig& c) {
    const auto& p = c.process;
    const auto& m = c.growth;
    const auto scan = scan_options(c);
    const auto cps = find_local_maxima(m, 0.0, p.S_in, scan);
    io::json folds = io::json::array();
    for (const auto& x : cps.maxima) {
        folds.push_back({{"S_bar", x.S_bar}, {"class", to_string(classify_fold(m, x.S_bar))}});
    }
    for (const auto& x : cps.minima) {
        folds.push_back({{"S_bar", x.S_bar}, {"class", to_string(classify_fold(m, x.S_bar))}});
    }
    for (const auto& x : cps.degenerate) {
        folds.push_back({{"S_bar", x.S_bar}, {"class", to_string(classify_fold(m, x.S_bar))}});
    }
    io::json arcs = io::json::array();
    for (const auto& x : cps.maxima) {
        const auto q = singular_flow_Qs(p, m, x.S_bar, p.V_max);
        arcs.push_back({{"S_bar", x.S_bar}, {"mu", x.mu_value}, {"Qs_at_Vmax", q.value},
                        {"Qs_clamped", q.clamped}});
    }
    io::json table = io::json::array();
    const std::size_t rows = std::min<std::size_t>(c.inspect.resolution, 20);
    for (std::size_t i = 0; i <= rows; ++i) {
        const double S = p.S_in * static_cast<double>(i) / static_cast<double>(rows);
        table.push_back({{"S", S}, {"mu", m.mu(S)}});
    }
    io::json report = {{"process", io::to_json(p)},
                       {"growth", io::to_json(m)},
                       {"critical_points", io::to_json(cps)},
                       {"folds", folds},
                       {"singular_arcs", arcs},
                       {"mu_table", table},
                       {"assumptions", io::assumptions_json(m, p, scan)}};
    Outputs out;
    out.add_json("growth_report.json", report);
    out.add("mu_grid.csv", io::mu_grid_csv(m, p, c.inspect.resolution));
    return out;
}

inline Outputs cmd_check_assumptions(const io::RunConfig& c) {
    Outputs out;
    out.add_json("assumptions.json", io::assumptions_json(c.growth, c.process, scan_options(c)));
    return out;
}

inline Outputs cmd_simulate(const io::RunConfig& c) {
    const auto& p = c.process;
    const auto& m = c.growth;
    const auto& s = c.simulate;
    const FeedbackPolicy policy = io::make_policy(s.policy, m, p);
    io::json summary = {{"policy", to_string(policy.kind())},
                        {"initial", io::to_json(s.initial)},
                        {"dynamics", s.full ? "full" : "planar"}};
    if (policy.has_level()) summary["level"] = policy.value();
    Outputs out;

    if (policy.kind() == PolicyKind::singular_synthesis && !s.full) {
        const TargetTime r = time_to_target(p, m, policy.value(), s.initial, s.options);
        summary["T"] = r.T;
        summary["phases"] = {{"fill", r.fill_time},
                             {"arc", r.arc_time},
                             {"batch", r.batch_time},
                             {"batch_quadrature", r.batch_quadrature}};
        summary["saturated"] = r.saturated;
        summary["stop_event"] = to_string(EventKind::hit_Sref);
        summary["events"] = io::events_json(r.trajectory);
        summary["final"] = io::to_json(r.trajectory.final_state());
        summary["samples"] = r.trajectory.samples.size();
        out.add("trajectory.csv", io::trajectory_csv(r.trajectory));
        out.add_json("summary.json", summary);
        return out;
    }

    auto finish = [&](const auto& tr) {
        if (!tr.stop_event && !s.options.t_max) {
            throw TimeoutError("no stop event before the default t_max = " + io::number17(tr.final_time()));
        }
        summary["T"] = tr.final_time();
        summary["saturated"] = tr.saturated;
        summary["stop_event"] = tr.stop_event ? io::json(to_string(*tr.stop_event)) : io::json("t_max");
        summary["events"] = io::events_json(tr);
        summary["final"] = io::to_json(tr.final_state());
        summary["samples"] = tr.samples.size();
        out.add("trajectory.csv", io::trajectory_csv(tr));
    };
    if (s.full) {
        const FullState x0 = lift_state(p, s.initial);
        summary["M"] = conserved_M(p, x0);
        finish(simulate_full(p, m, policy, x0, s.stop, s.options));
    } else {
        finish(simulate(p, m, policy, s.initial, s.stop, s.options));
    }
    out.add_json("summary.json", summary);
    return out;
}

/// Extremal CSVs and one index per epsilon. Name clashes at 6 decimals get a _k suffix.
inline void add_field_files(Outputs& out, const FieldRun& run, std::set<std::string>& used) {
    const double eps = run.field.epsilon;
    io::json entries = io::json::array();
    for (const auto& e : run.field.extremals) {
        std::string name = io::extremal_file_name(e.config.alpha, eps);
        if (used.count(name)) {
            const std::string stem = name.substr(0, name.size() - 4);
            for (int k = 1;; ++k) {
                name = stem + "_" + std::to_string(k) + ".csv";
                if (!used.count(name)) break;
            }
        }
        used.insert(name);
        out.add(name, io::extremal_csv(e));
        entries.push_back(io::to_json(e, name));
    }
    io::json failures = io::json::array();
    for (const auto& f : run.field.failures) failures.push_back({{"alpha", f.alpha}, {"message", f.message}});
    io::json index = {{"epsilon", eps}, {"extremals", entries}, {"failures", failures}};
    if (run.critical) {
        index["alpha_grid"] = "adaptive";
        index["critical_angles"] = run.critical->alphas;
        index["scan_evaluations"] = run.critical->evaluations;
    } else {
        index["alpha_grid"] = "uniform";
    }
    out.add_json("field_index_e" + io::format_g(eps) + ".json", index);
}

inline Outputs cmd_field(const io::RunConfig& c, unsigned threads) {
    std::vector<FieldRun> runs;
    for (double eps : c.field.epsilons) runs.push_back(build_field(c.process, c.growth, eps, c.field, threads));
    Outputs out;
    std::set<std::string> used;
    for (const auto& r : runs) add_field_files(out, r, used);
    return out;
}

inline Outputs cmd_curve_i(const io::RunConfig& c, unsigned threads) {
    const auto arcs = singular_levels(c.growth, c.process);
    if (arcs.size() != 2) {
        throw DomainError("curve I needs exactly two maxima of mu, found " + std::to_string(arcs.size()));
    }
    IndifferenceOptions io;
    io.scan_points = c.curve_i.scan_points;
    io.tol = c.curve_i.tol;
    io.threads = threads;
    const auto curve = indifference_curve(c.process, c.growth, arcs[0], arcs[1], c.curve_i.V0, io);
    io::json j = io::to_json(curve);
    j["S_bar1"] = arcs[0];
    j["S_bar2"] = arcs[1];
    Outputs out;
    out.add("curve_I.csv", io::curve_csv(curve));
    out.add_json("curve_I.json", j);
    return out;
}

inline io::json to_json(const SynthesisRun& r) {
    io::json j = {{"epsilon", r.epsilon},
                  {"extremals", r.field.field.extremals.size()},
                  {"field_failures", r.field.field.failures.size()},
                  {"intersections", r.intersections.size()},
                  {"labels", io::to_json(r.regions)},
                  {"B_hull", io::hull_json(r.regions)},
                  {"curve_I", r.curve ? io::to_json(*r.curve) : io::json(nullptr)},
                  {"hausdorff", r.hausdorff ? io::to_json(*r.hausdorff) : io::json(nullptr)}};
    if (!r.note.empty()) j["note"] = r.note;
    return j;
}

/// The headline run is epsilon = 0.01 when scheduled, otherwise the smallest epsilon.
inline std::size_t headline_index(const std::vector<double>& eps) {
    std::size_t best = 0;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        if (eps[i] == 0.01) return i;
        if (std::abs(eps[i]) < std::abs(eps[best])) best = i;
    }
    return best;
}

inline Outputs cmd_report(const io::RunConfig& c, unsigned threads) {
    if (c.report.epsilons.empty()) throw ConfigError("report.epsilon is empty");
    std::vector<SynthesisRun> runs;
    for (double eps : c.report.epsilons) runs.push_back(synthesis_run(c.process, c.growth, eps, c, threads));

    const SynthesisRun& head = runs[headline_index(c.report.epsilons)];
    io::json runs_json = io::json::array();
    for (const auto& r : runs) runs_json.push_back(to_json(r));

    // Nonincreasing along the schedule order, over runs that produced a distance.
    bool nonincreasing = true;
    std::optional<double> prev;
    io::json seq = io::json::array();
    for (const auto& r : runs) {
        if (!r.hausdorff) continue;
        seq.push_back({{"epsilon", r.epsilon}, {"symmetric", r.hausdorff->symmetric}});
        if (prev && r.hausdorff->symmetric > *prev) nonincreasing = false;
        prev = r.hausdorff->symmetric;
    }

    io::json report = {{"process", io::to_json(c.process)},
                       {"growth", io::to_json(c.growth)},
                       {"singular_levels", singular_levels(c.growth, c.process)},
                       {"epsilon", head.epsilon},
                       {"intersections", io::to_json(head.intersections)},
                       {"labels", io::to_json(head.regions)},
                       {"B_hull", io::hull_json(head.regions)},
                       {"curve_I", head.curve ? io::to_json(*head.curve) : io::json(nullptr)},
                       {"hausdorff", head.hausdorff ? io::to_json(*head.hausdorff) : io::json(nullptr)},
                       {"hausdorff_sequence", seq},
                       {"hausdorff_nonincreasing", seq.size() >= 2 ? io::json(nonincreasing) : io::json(nullptr)},
                       {"runs", runs_json}};
    Outputs out;
    out.add_json("synthesis_report.json", report);
    if (head.curve) out.add("curve_I.csv", io::curve_csv(*head.curve));
    if (c.report.write_fields) {
        std::set<std::string> used;
        for (const auto& r : runs) add_field_files(out, r.field, used);
    }
    return out;
}

}  // namespace fedbatch::app
