// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fedbatch/app/pipeline.hpp"

using namespace fedbatch;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

GrowthModel ex1() { return GrowthModel({{0.15, 1, 1}}); }
GrowthModel ex2() { return GrowthModel({{0.44, 1.7, 0.04}, {1.55, 90, 0.36}}); }
GrowthModel two_humps() { return GrowthModel({{1.2, 0.1, 0.1}, {1.5, 5.0, 2.0}}); }

unsigned workers() { return std::max(1u, std::min(8u, std::thread::hardware_concurrency())); }

std::string fmt(const char* f, double a) {
    char b[64];
    std::snprintf(b, sizeof b, f, a);
    return b;
}

FieldOptions field_options() {
    FieldOptions fo;
    fo.threads = workers();
    return fo;
}

// The literal grid: 64 angles in (pi, 3 pi / 2).
ExtremalField literal_field(const ProcessParams& p, const GrowthModel& m) {
    return extremal_field(p, m, 0.01, uniform_alpha_grid(64, pi(), 1.5 * pi()), field_options());
}

// The default grid: 64 adaptive angles in (pi / 2, pi).
ExtremalField default_field(const ProcessParams& p, const GrowthModel& m, double eps, std::size_t n = 64) {
    const AdaptiveGridOptions ag;
    const auto crit = find_critical_angles(p, m, eps, ag, field_options());
    return extremal_field(p, m, eps, adaptive_alpha_grid(crit, n, ag), field_options());
}

struct Case {
    FullState x0;
    FeedbackPolicy policy;
};

std::vector<Case> random_cases(const ProcessParams& p) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> uS(p.S_ref, p.S_in * 0.98), uV(1.0, p.V_max), uM(20.0, 400.0),
        uQ(0.0, p.Q_max), uT(0.5, 19.5);
    std::vector<Case> out;
    for (int k = 0; k < 50; ++k) {
        ProcessParams q = p;
        q.M0 = uM(rng);
        const FullState x0 = lift_state(q, {uS(rng), uV(rng)});
        std::vector<double> breaks(4);
        for (auto& b : breaks) b = uT(rng);
        std::sort(breaks.begin(), breaks.end());
        std::vector<double> flows(5);
        for (auto& f : flows) f = uQ(rng);
        out.push_back({x0, FeedbackPolicy::piecewise_constant(breaks, flows)});
    }
    return out;
}

Verdict c1_conservation() {
    const ProcessParams p;
    const auto m = ex2();
    StopSpec stop;
    stop.at_Sref = false;
    SimulationOptions opt;
    opt.t_max = 20.0;
    double worst = 0.0;
    for (const auto& c : random_cases(p)) {
        const auto tr = simulate_full(p, m, c.policy, c.x0, stop, opt);
        const double M0 = conserved_M(p, c.x0);
        for (const auto& s : tr.samples) worst = std::max(worst, std::abs(conserved_M(p, s.state) - M0) / std::abs(M0));
    }
    return {worst <= 1e-8, "max |M-M0|/M0 = " + fmt("%.3e", worst) + " over 50 runs"};
}

Verdict c2_reduction() {
    const ProcessParams p;
    const auto m = ex2();
    StopSpec stop;
    stop.at_Sref = false;
    SimulationOptions opt;
    opt.t_max = 20.0;
    for (int i = 1; i < 1000; ++i) opt.output_times.push_back(0.02 * i);
    double worst = 0.0;
    std::size_t compared = 0;
    int drained = 0;
    for (const auto& c : random_cases(p)) {
        ProcessParams q = p;
        q.M0 = conserved_M(p, c.x0);
        const auto full = simulate_full(p, m, c.policy, c.x0, stop, opt);
        const auto planar = simulate(q, m, c.policy, {c.x0.S, c.x0.V}, stop, opt);
        std::size_t j = 0;
        for (const auto& s : planar.samples) {
            while (j < full.samples.size() && full.samples[j].t < s.t) ++j;
            if (j < full.samples.size() && full.samples[j].t == s.t) {
                worst = std::max(worst, std::abs(full.samples[j].state.S - s.state.S));
                ++compared;
            }
        }
        // Batch phases drain S toward 0 without reaching it; where round-off
        // takes S below 0 first is ill-conditioned, so only the common interval counts.
        drained += std::abs(full.final_time() - planar.final_time()) > 1e-9;
    }
    return {worst <= 1e-6 && compared >= 1000,
            "sup |S_3D - S_2D| = " + fmt("%.3e", worst) + " at " + std::to_string(compared) + " common times, " +
                std::to_string(drained) + " runs ended at S = 0 at different times"};
}

Verdict c3_singular_closed_form() {
    ProcessParams p;
    const auto m = two_humps();
    p.Q_max = 2.0 * check_assumption3(p, m).max_required_flow;
    if (!check_assumption3(p, m).holds) return {false, "raised Q_max does not satisfy the controllability bound"};
    double worst = 0.0;
    const auto maxima = find_local_maxima(m, 0.0, p.S_in).maxima;
    for (const auto& a : maxima) {
        const double V1 = 20.0;
        StopSpec stop;
        stop.at_Sref = false;
        SimulationOptions opt;
        opt.t_max = singular_duration(p, m, a.S_bar, V1, 2.0 * V1);
        const auto tr = simulate(p, m, FeedbackPolicy::singular_synthesis(a.S_bar), {a.S_bar, V1}, stop, opt);
        if (tr.saturated) return {false, "arc flow saturated"};
        for (const auto& s : tr.samples) {
            const double V = singular_volume(p, m, a.S_bar, V1, 0.0, s.t);
            worst = std::max(worst, std::abs(s.state.V - V) / V);
        }
        worst = std::max(worst, std::abs(tr.final_state().V - 2.0 * V1) / (2.0 * V1));
    }
    return {worst <= 1e-6 && maxima.size() == 2,
            std::to_string(maxima.size()) + " arcs, Q_max = " + fmt("%.4g", p.Q_max) + ", max rel error " + fmt("%.3e", worst)};
}

Verdict c4_critical_points() {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> lg(-2.0, 2.0);
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
        const HaldaneTerm t{std::pow(10.0, lg(rng)), std::pow(10.0, lg(rng)), std::pow(10.0, lg(rng))};
        const double peak = std::sqrt(t.K * t.L);
        const auto cps = find_local_maxima(GrowthModel({t}), 0.0, 4.0 * peak);
        if (cps.maxima.size() != 1) return {false, "term " + std::to_string(k) + " gave " + std::to_string(cps.maxima.size()) + " maxima"};
        worst = std::max(worst, std::abs(cps.maxima[0].S_bar - peak) / peak);
    }
    const auto m = two_humps();
    const auto cps = find_local_maxima(m, 0.0, 10.0);
    std::vector<double> grid;
    const int n = 1000000;
    double a = m.mu(0.0), b = m.mu(10.0 / n);
    for (int i = 2; i <= n; ++i) {
        const double c = m.mu(10.0 * i / n);
        if (b > a && b >= c) grid.push_back(10.0 * (i - 1) / n);
        a = b;
        b = c;
    }
    bool humps_ok = cps.maxima.size() == 2 && grid.size() == 2 && cps.maxima[0].S_bar < cps.maxima[1].S_bar;
    double gap = 0.0;
    for (std::size_t i = 0; humps_ok && i < 2; ++i) gap = std::max(gap, std::abs(cps.maxima[i].S_bar - grid[i]));
    humps_ok = humps_ok && gap <= 2.0 * 10.0 / n;
    return {worst <= 1e-8 && humps_ok, "single-term rel error " + fmt("%.2e", worst) + ", two-peak model " +
                                         std::to_string(cps.maxima.size()) + " maxima, grid gap " + fmt("%.1e", gap)};
}

struct FieldStats {
    double max_H = 0.0;
    std::size_t samples = 0;
    std::size_t pS_bad = 0;
    std::size_t pV_bad = 0;
};

FieldStats stats(const ProcessParams& p, const ExtremalField& f) {
    FieldStats s;
    for (const auto& e : f.extremals) {
        s.max_H = std::max(s.max_H, e.max_H_residual());
        for (const auto& x : e.samples) {
            if (!(x.S > p.S_ref && x.S < p.S_in && x.V > 0.0 && x.V < p.V_max)) continue;
            ++s.samples;
            s.pS_bad += !(x.pS < 0.0);
            s.pV_bad += !(x.pV > 0.0);
        }
    }
    return s;
}

struct SignFields {
    FieldStats literal, dflt;
    std::size_t failures = 0;
};

const SignFields& sign_fields() {
    static const SignFields f = [] {
        const ProcessParams p;
        SignFields s;
        for (const auto& m : {ex1(), ex2()}) {
            const auto lit = literal_field(p, m);
            const auto def = default_field(p, m, 0.01);
            const auto a = stats(p, lit), b = stats(p, def);
            s.literal.max_H = std::max(s.literal.max_H, a.max_H);
            s.literal.samples += a.samples;
            s.literal.pS_bad += a.pS_bad;
            s.literal.pV_bad += a.pV_bad;
            s.dflt.max_H = std::max(s.dflt.max_H, b.max_H);
            s.dflt.samples += b.samples;
            s.dflt.pS_bad += b.pS_bad;
            s.dflt.pV_bad += b.pV_bad;
            s.failures += lit.failures.size() + def.failures.size();
        }
        return s;
    }();
    return f;
}

Verdict c5_hamiltonian() {
    const auto& s = sign_fields();
    return {s.literal.max_H <= 1e-6 && s.dflt.max_H <= 1e-6 && s.failures == 0,
            "max H residual " + fmt("%.2e", s.literal.max_H) + " on (pi, 3pi/2), " + fmt("%.2e", s.dflt.max_H) +
                " on the adaptive (pi/2, pi) grid"};
}

Verdict c6_signs() {
    const auto& s = sign_fields();
    std::ostringstream o;
    o << "(pi, 3pi/2): " << s.literal.pS_bad << " pS>=0 and " << s.literal.pV_bad << " pV<=0 of " << s.literal.samples
      << " interior samples; (pi/2, pi): " << s.dflt.pS_bad << " pS>=0 and " << s.dflt.pV_bad << " pV<=0 of "
      << s.dflt.samples;
    return {s.literal.pS_bad + s.literal.pV_bad == 0, o.str()};
}

Verdict c7_single_arc() {
    const ProcessParams p;
    const auto m = ex1();
    const auto a2 = check_assumption2(m, p);
    const bool one = a2.maxima.maxima.size() == 1 && a2.maxima.maxima[0].S_bar > p.S_ref;
    const bool a3 = check_assumption3(p, m).holds;
    const auto def = default_field(p, m, 0.01);
    const auto x = detect_intersections(p, def.extremals);
    std::ostringstream o;
    o << x.size() << " crossings among " << def.extremals.size() << " extremals; single arc " << (one ? "yes" : "no")
      << ", controllability " << (a3 ? "holds" : "fails");
    return {one && a3 && x.empty() && def.extremals.size() == 64, o.str()};
}

Verdict c8_two_arcs() {
    const ProcessParams p;
    const auto m = ex2();
    const bool a2 = check_assumption2(m, p).holds;
    const bool a3 = check_assumption3(p, m).holds;
    const auto arcs = app::singular_levels(m, p);
    const auto f = default_field(p, m, 0.01);
    const auto x = detect_intersections(p, f.extremals);
    LabelOptions lo;
    lo.tracking_tol = 0.02;
    const auto r = label_extremals(p, f.extremals, arcs, x, lo);
    int n1 = 0, n2 = 0;
    for (auto l : r.labels) n1 += l == ExtremalLabel::tracks_S1, n2 += l == ExtremalLabel::tracks_S2;
    bool between = true;
    for (const auto& c : x) between = between && c.point.S > arcs[0] && c.point.S < arcs[1];
    std::ostringstream o;
    o << x.size() << " crossings, all between the arcs: " << (between ? "yes" : "no") << "; tracks_S1 " << n1
      << ", tracks_S2 " << n2;
    return {a2 && a3 && !x.empty() && between && n1 > 0 && n2 > 0, o.str()};
}

Verdict c9_monotone() {
    const ProcessParams p;
    const auto m = ex2();
    const auto arcs = app::singular_levels(m, p);
    const std::vector<PlanarState> probes{{7.0, 40.0}, {8.0, 30.0}, {6.0, 20.0}, {3.0, 44.0}, {1.0, 47.0}};
    const std::vector<double> eps{0.04, 0.02, 0.01, 0.005};
    std::vector<std::vector<double>> T(probes.size());
    for (double e : eps) {
        const auto f = default_field(p, m, e);
        for (std::size_t i = 0; i < probes.size(); ++i) {
            T[i].push_back(refine_min_time(p, m, f, probes[i], RefineOptions{}, field_options()).T_hat);
        }
    }
    bool ok = true;
    double worst_gap = 0.0;
    std::ostringstream o;
    for (std::size_t i = 0; i < probes.size(); ++i) {
        for (std::size_t k = 1; k < eps.size(); ++k) ok = ok && T[i][k] >= T[i][k - 1] * (1.0 - 1e-3);
        const double ref = std::min(time_to_target(p, m, arcs[0], probes[i]).T, time_to_target(p, m, arcs[1], probes[i]).T);
        const double gap = std::abs(T[i].back() - ref) / ref;
        worst_gap = std::max(worst_gap, gap);
        ok = ok && gap <= 0.05;
    }
    o << "nondecreasing at all 5 probes: " << (ok ? "yes" : "no") << ", max gap to the best synthesis at eps 0.005 "
      << fmt("%.2e", worst_gap);
    return {ok, o.str()};
}

Verdict c10_indifference() {
    const ProcessParams p;
    const auto m = ex2();
    const auto arcs = app::singular_levels(m, p);
    std::vector<double> V0;
    for (int k = 0; k <= 20; ++k) V0.push_back(30.0 + k);
    IndifferenceOptions io;
    io.threads = workers();
    const auto c = indifference_curve(p, m, arcs[0], arcs[1], V0, io);
    double worst = 0.0;
    bool brackets = true;
    for (const auto& s : c.samples) {
        const double T1 = time_to_target(p, m, arcs[0], {s.S_star, s.V0}).T;
        const double T2 = time_to_target(p, m, arcs[1], {s.S_star, s.V0}).T;
        worst = std::max(worst, std::abs(T1 - T2) / s.T);
        const double glo = time_to_target(p, m, arcs[0], {s.bracket_lo, s.V0}).T -
                           time_to_target(p, m, arcs[1], {s.bracket_lo, s.V0}).T;
        const double ghi = time_to_target(p, m, arcs[0], {s.bracket_hi, s.V0}).T -
                           time_to_target(p, m, arcs[1], {s.bracket_hi, s.V0}).T;
        brackets = brackets && ((glo < 0.0 && ghi >= 0.0) || (glo > 0.0 && ghi <= 0.0)) &&
                   s.bracket_lo <= s.S_star && s.S_star <= s.bracket_hi;
    }
    std::ostringstream o;
    o << c.samples.size() << " samples (" << c.omitted.size() << " slices omitted), max |T1-T2|/T "
      << fmt("%.2e", worst) << ", brackets confirmed: " << (brackets ? "yes" : "no");
    return {!c.samples.empty() && worst <= 1e-4 && brackets, o.str()};
}

Verdict c11_hausdorff() {
    const ProcessParams p;
    const auto m = ex2();
    io::RunConfig cfg;
    cfg.process = p;
    cfg.growth = m;
    cfg.report.tracking_tol = 0.02;
    std::vector<double> h;
    std::ostringstream o;
    for (double e : {0.02, 0.01, 0.005}) {
        const auto run = app::synthesis_run(p, m, e, cfg, workers());
        if (!run.hausdorff) return {false, "no distance at eps " + fmt("%g", e) + ": " + run.note};
        h.push_back(run.hausdorff->symmetric);
        o << "eps " << e << ": " << fmt("%.4f", h.back()) << "  ";
    }
    const bool ok = h[1] <= h[0] && h[2] <= h[1];
    return {ok, o.str()};
}

Verdict c12_sigma() {
    std::vector<std::pair<ProcessParams, GrowthModel>> cases{{ProcessParams{}, ex1()}, {ProcessParams{}, ex2()}};
    ProcessParams raised;
    raised.Q_max = 2.0 * check_assumption3(raised, two_humps()).max_required_flow;
    cases.emplace_back(raised, two_humps());
    double worst = 0.0;
    bool increasing = true;
    int used = 0;
    for (const auto& [p, m] : cases) {
        if (!check_assumption3(p, m).holds) continue;
        ++used;
        const auto c = sigma_curve(p, m);
        for (std::size_t i = 1; i < c.samples.size(); ++i) {
            increasing = increasing && c.samples[i].S < c.samples[i - 1].S && c.samples[i].V < c.samples[i - 1].V;
        }
        const auto& start = c.samples.back();
        SimulationOptions opt;
        for (const auto& s : c.samples) {
            if (s.V > start.V) opt.output_times.push_back((s.V - start.V) / p.Q_max);
        }
        std::sort(opt.output_times.begin(), opt.output_times.end());
        StopSpec stop;
        stop.at_Sref = false;
        stop.at_Vmax = true;
        const auto tr = simulate(p, m, FeedbackPolicy::constant(p.Q_max), start, stop, opt);
        std::size_t j = c.samples.size();
        for (const auto& s : tr.samples) {
            while (j > 0 && c.samples[j - 1].V < s.state.V - 1e-9) --j;
            if (j > 0 && std::abs(c.samples[j - 1].V - s.state.V) <= 1e-9) {
                worst = std::max(worst, std::abs(c.samples[j - 1].S - s.state.S));
            }
        }
        worst = std::max(worst, std::abs(tr.final_state().S - p.S_ref));
    }
    return {used == 3 && increasing && worst <= 1e-6,
            std::to_string(used) + " configurations, increasing: " + (increasing ? "yes" : "no") +
                ", max |sigma - S_forward| " + fmt("%.2e", worst)};
}

Verdict c13_derivatives() {
    const ProcessParams p;
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> uS(1e-3, 9.99), uV(0.5, 50.0);
    const GrowthModel models[] = {ex1(), ex2(), two_humps()};
    double w1 = 0.0, w2 = 0.0, wJ = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const auto& m = models[k % 3];
        const double S = uS(rng);
        const double V = uV(rng);
        const double h = 1e-5 * std::max(1.0, S);
        const double floor1 = 1e-3 * m.mu(S) / std::max(1.0, S);
        const double floor2 = floor1 / std::max(1.0, S);
        const double d1 = (m.mu(S + h) - m.mu(S - h)) / (2 * h);
        const double d2 = (m.mu_prime(S + h) - m.mu_prime(S - h)) / (2 * h);
        w1 = std::max(w1, std::abs(d1 - m.mu_prime(S)) / std::max(std::abs(m.mu_prime(S)), floor1));
        w2 = std::max(w2, std::abs(d2 - m.mu_second(S)) / std::max(std::abs(m.mu_second(S)), floor2));
        const Mat2 J = drift_jacobian(p, m, {S, V});
        const double hV = 1e-5 * V;
        const auto FSp = drift_F(p, m, {S + h, V}), FSm = drift_F(p, m, {S - h, V});
        const auto FVp = drift_F(p, m, {S, V + hV}), FVm = drift_F(p, m, {S, V - hV});
        for (int i = 0; i < 2; ++i) {
            const double scale = std::max({std::abs(J[i][0]), std::abs(J[i][1]), 1e-12});
            wJ = std::max(wJ, std::abs((FSp[i] - FSm[i]) / (2 * h) - J[i][0]) / scale);
            wJ = std::max(wJ, std::abs((FVp[i] - FVm[i]) / (2 * hV) - J[i][1]) / scale);
        }
    }
    return {w1 <= 1e-6 && w2 <= 1e-6 && wJ <= 1e-6,
            "max rel error mu' " + fmt("%.2e", w1) + ", mu'' " + fmt("%.2e", w2) + ", dF " + fmt("%.2e", wJ)};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        double budget;  ///< seconds, 0 for none
        std::function<Verdict()> run;
    };
    const std::vector<Criterion> all{
        {"conservation", 10, c1_conservation},
        {"reduction-equivalence", 0, c2_reduction},
        {"singular-arc-closed-form", 1, c3_singular_closed_form},
        {"critical-points", 5, c4_critical_points},
        {"hamiltonian-constancy", 30, c5_hamiltonian},
        {"adjoint-signs", 0, c6_signs},
        {"single-arc-structure", 0, c7_single_arc},
        {"two-arc-structure", 0, c8_two_arcs},
        {"monotone-convergence", 180, c9_monotone},
        {"indifference-curve", 0, c10_indifference},
        {"b-boundary-convergence", 300, c11_hausdorff},
        {"sigma-curve", 0, c12_sigma},
        {"derivative-oracles", 0, c13_derivatives},
    };
    int failed = 0;
    for (std::size_t i = 0; i < all.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = all[i].run();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (all[i].budget > 0 && dt > all[i].budget) {
            v.pass = false;
            v.detail += " (over the " + fmt("%g", all[i].budget) + " s budget)";
        }
        failed += !v.pass;
        std::printf("%s %2zu %s: %s [%.2f s]\n", v.pass ? "PASS" : "FAIL", i + 1, all[i].name, v.detail.c_str(), dt);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
    return failed == 0 ? 0 : 1;
}
