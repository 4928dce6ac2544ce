#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "fedbatch/error.hpp"

namespace fedbatch {

/// mu(S) = mu_bar S / (K + S + S^2/L): rises, peaks at sqrt(K L), then decays.
struct HaldaneTerm {
    double mu_bar = 1.0;
    double K = 1.0;
    double L = 1.0;

    double peak() const { return std::sqrt(K * L); }

    double mu(double S) const { return mu_bar * S / denom(S); }

    double mu_prime(double S) const {
        const double D = denom(S);
        return mu_bar * (K - S * S / L) / (D * D);
    }

    double mu_second(double S) const {
        // N = K - S^2/L, D = K + S + S^2/L; mu'' = mu_bar (N' D - 2 N D') / D^3
        const double D = denom(S);
        const double N = K - S * S / L;
        const double dN = -2.0 * S / L;
        const double dD = 1.0 + 2.0 * S / L;
        return mu_bar * (dN * D - 2.0 * N * dD) / (D * D * D);
    }

    void validate() const {
        if (!(mu_bar > 0.0) || !(K > 0.0) || !(L > 0.0) || !std::isfinite(mu_bar) ||
            !std::isfinite(K) || !std::isfinite(L)) {
            throw ConfigError("Haldane term needs finite mu_bar > 0, K > 0, L > 0");
        }
    }

private:
    double denom(double S) const { return K + S + S * S / L; }
};

/// Growth rate as a sum of Haldane terms. Immutable once built.
class GrowthModel {
public:
    GrowthModel() = default;

    explicit GrowthModel(std::vector<HaldaneTerm> terms) : terms_(std::move(terms)) {
        if (terms_.empty()) throw ConfigError("growth model needs at least one term");
        for (const auto& t : terms_) t.validate();
    }

    const std::vector<HaldaneTerm>& terms() const noexcept { return terms_; }

    double mu(double S) const {
        check(S);
        double s = 0.0;
        for (const auto& t : terms_) s += t.mu(S);
        return s;
    }

    double mu_prime(double S) const {
        check(S);
        double s = 0.0;
        for (const auto& t : terms_) s += t.mu_prime(S);
        return s;
    }

    double mu_second(double S) const {
        check(S);
        double s = 0.0;
        for (const auto& t : terms_) s += t.mu_second(S);
        return s;
    }

private:
    static void check(double S) {
        if (!(S >= 0.0) || !std::isfinite(S)) {
            throw DomainError("growth rate evaluated at S = " + std::to_string(S) +
                              " (must be finite and >= 0)");
        }
    }

    std::vector<HaldaneTerm> terms_;
};

inline double eval_mu(const GrowthModel& m, double S) { return m.mu(S); }
inline double eval_mu_prime(const GrowthModel& m, double S) { return m.mu_prime(S); }
inline double eval_mu_second(const GrowthModel& m, double S) { return m.mu_second(S); }

struct CriticalPoint {
    double S_bar = 0.0;
    double mu_value = 0.0;
    double mu_second = 0.0;
};

/// Roots of mu' on an interval, split by the sign of mu''.
struct CriticalPointSet {
    std::vector<CriticalPoint> maxima;
    std::vector<CriticalPoint> minima;
    std::vector<CriticalPoint> degenerate;
};

struct ScanOptions {
    std::size_t grid_points = 2048;
    double rel_tol = 1e-10;        ///< bisection stops at |interval| <= rel_tol (S_hi - S_lo)
    double degenerate_curvature = 1e-10;
};

inline CriticalPointSet find_local_maxima(const GrowthModel& model, double S_lo, double S_hi,
                                          const ScanOptions& opt = {}) {
    if (opt.grid_points < 2) throw ConfigError("scan grid needs at least 2 points");
    if (!(S_lo >= 0.0) || !(S_hi > S_lo) || !std::isfinite(S_hi)) {
        throw DomainError("find_local_maxima needs 0 <= S_lo < S_hi");
    }
    const double width = S_hi - S_lo;
    const double tol = opt.rel_tol * width;
    const std::size_t n = opt.grid_points;
    auto grid = [&](std::size_t i) {
        return i + 1 == n ? S_hi : S_lo + width * static_cast<double>(i) / static_cast<double>(n - 1);
    };

    std::vector<double> roots;
    double a = grid(0);
    double fa = model.mu_prime(a);
    if (fa == 0.0) roots.push_back(a);
    for (std::size_t i = 1; i < n; ++i) {
        const double b = grid(i);
        const double fb = model.mu_prime(b);
        if (fb == 0.0) {
            roots.push_back(b);
        } else if (fa != 0.0 && (fa < 0.0) != (fb < 0.0)) {
            auto f = [&](double s) { return model.mu_prime(s); };
            auto done = [tol](double lo, double hi) { return hi - lo <= tol; };
            const auto [lo, hi] = boost::math::tools::bisect(f, a, b, done);
            roots.push_back(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }

    CriticalPointSet out;
    for (double r : roots) {
        CriticalPoint cp{r, model.mu(r), model.mu_second(r)};
        if (std::abs(cp.mu_second) < opt.degenerate_curvature) {
            out.degenerate.push_back(cp);
        } else if (cp.mu_second < 0.0) {
            out.maxima.push_back(cp);
        } else {
            out.minima.push_back(cp);
        }
    }
    return out;
}

/// True when S is a nondegenerate local maximum of mu up to a Newton-step
/// distance of `rel_tol * max(1, S)`.
inline bool is_local_maximum(const GrowthModel& model, double S, double rel_tol = 1e-6) {
    if (!(S > 0.0) || !std::isfinite(S)) return false;
    const double d2 = model.mu_second(S);
    if (!(d2 < 0.0)) return false;
    return std::abs(model.mu_prime(S) / d2) <= rel_tol * std::max(1.0, S);
}

}  // namespace fedbatch

#include "fedbatch/process.hpp"

namespace fedbatch {

struct Assumption2Report {
    bool holds = false;
    CriticalPointSet maxima;
    std::vector<std::string> violations;
};

/// Several interior maxima, all strictly between S_ref and S_in.
inline Assumption2Report check_assumption2(const GrowthModel& model, const ProcessParams& params,
                                           const ScanOptions& opt = {}) {
    Assumption2Report r;
    r.maxima = find_local_maxima(model, 0.0, params.S_in, opt);
    const auto& mx = r.maxima.maxima;
    if (mx.size() <= 1) {
        r.violations.push_back("card M = " + std::to_string(mx.size()) + " (need > 1)");
    }
    if (!mx.empty()) {
        if (!(params.S_ref < mx.front().S_bar)) {
            r.violations.push_back("ordering: S_ref < min M fails");
        }
        if (!(mx.back().S_bar < params.S_in)) {
            r.violations.push_back("ordering: max M < S_in fails");
        }
    } else {
        r.violations.push_back("ordering: no interior maximum below S_in");
    }
    r.holds = r.violations.empty();
    return r;
}

}  // namespace fedbatch
