#pragma once

// Subcommand pipelines behind the shearspec binary. run() validates, consults the cache,
// dispatches, writes <out>/<subcommand>.json plus side files and maps errors to exit codes.

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <iostream>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "shearspec/catseye.hpp"
#include "shearspec/config.hpp"
#include "shearspec/contour.hpp"
#include "shearspec/io.hpp"
#include "shearspec/orr_sommerfeld.hpp"
#include "shearspec/profiles.hpp"
#include "shearspec/rayleigh.hpp"
#include "shearspec/shear3d.hpp"
#include "shearspec/sturm.hpp"

namespace shearspec::cli {

using io::json;

enum ExitCode : int { ok = 0, config_error = 2, no_convergence = 3, no_instability = 4, internal_error = 1 };

struct Outcome {
    io::ResultRecord record;
    int exit_code = ok;
    bool from_cache = false;
    std::string error;  // set when no record could be produced
};

namespace detail {

// what a pipeline hands back before the record envelope is filled in
struct Computed {
    json payload = json::object();
    json summary = json::object();
    json provenance = json::object();
    std::vector<std::string> warnings;
    std::map<std::string, std::string> files;
    int exit_code = ok;
};

inline ShearProfile make_profile(const RunConfig& cfg, std::vector<std::string>& warnings) {
    const std::string& kind = cfg.text("profile");
    if (kind == "linear") return ShearProfile::linear();
    if (kind == "sine") return ShearProfile::sine_series(cfg.reals("coeffs"));
    auto p = ShearProfile::oscillatory(cfg.integer("n"), cfg.real("A"));
    if (!p.window().in_window)
        warnings.push_back("A=" + io::fmt_short(p.amplitude()) +
                           " lies outside the amplitude window (1/(8 pi), 1/(4 pi)); in_window=false");
    return p;
}

inline json profile_json(const ShearProfile& p) {
    json j{{"kind", to_string(p.kind())}};
    if (p.kind() == ProfileKind::oscillatory) {
        j["n"] = p.n();
        j["A"] = p.amplitude();
        j["delta"] = io::exact(p.delta());
        j["in_window"] = p.window().in_window;
    } else if (p.kind() == ProfileKind::sine_series) {
        j["coeffs"] = p.coeffs();
    }
    return j;
}

inline double bound_or_nan(const ShearProfile& p) {
    if (p.kind() != ProfileKind::oscillatory) return std::numeric_limits<double>::quiet_NaN();
    try {
        return lambda1_bound(p.n(), p.delta());
    } catch (const BoundError&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

inline json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline InstabilityCertificate certificate(const ShearProfile& p, int N, int modes = 3) {
    return certify_instability(p, CertifyOptions{N, modes});
}

inline double default_alpha(const ShearProfile& p, double requested, const char* what) {
    if (requested > 0.0) return requested;
    auto cert = certificate(p, 0);
    if (!cert.unstable)
        throw NotUnstableError(std::string(what) + ": the profile is not certified unstable, so alpha_n / 2 is undefined; set it explicitly");
    return 0.5 * cert.alpha_n;
}

// ---------------------------------------------------------------- sturm
inline Computed run_sturm(const RunConfig& cfg) {
    Computed out;
    ShearProfile p = make_profile(cfg, out.warnings);
    out.payload["profile"] = profile_json(p);
    const double bound = bound_or_nan(p);
    out.payload["bound"] = std::isfinite(bound) ? io::exact(bound) : json(nullptr);
    if (p.kind() == ProfileKind::oscillatory && !std::isfinite(bound))
        out.warnings.push_back("lambda_1 bound is not negative for delta=" + io::fmt_short(p.delta()));

    InstabilityCertificate cert;
    try {
        cert = certificate(p, cfg.integer("N"), cfg.integer("modes"));
    } catch (const DomainError& e) {
        // outside the monotone regime the certificate does not apply; report that and stop
        out.warnings.push_back(std::string("certificate not applicable: ") + e.what());
        out.payload["applicable"] = false;
        out.payload["reason"] = e.what();
        out.summary = {{"applicable", false}, {"unstable", false}};
        if (std::isfinite(bound)) out.summary["bound"] = bound;
        if (p.kind() == ProfileKind::oscillatory) out.summary["in_window"] = p.window().in_window;
        return out;
    }
    out.payload["applicable"] = true;
    out.payload["unstable"] = cert.unstable;
    out.provenance["N"] = cert.N;
    out.summary["applicable"] = true;
    out.summary["unstable"] = cert.unstable;
    if (p.kind() == ProfileKind::oscillatory) out.summary["in_window"] = p.window().in_window;
    if (std::isfinite(bound)) out.summary["bound"] = bound;
    if (cert.witnesses.empty()) {
        out.payload["reason"] = "no inflection point";
        return out;
    }

    SLProblem prob = build_Q(p, cert.witness_inflection, cert.N);
    SLSpectrum sp = solve_sl(prob, cfg.integer("modes"));
    json lam = json::array();
    for (std::size_t m = 0; m < sp.eigenvalues.size(); ++m)
        lam.push_back(io::measured(sp.eigenvalues[m], cert.N, sp.refinement_deltas[m]));
    out.payload["lambda"] = lam;
    out.payload["lambda1"] = io::measured(cert.lambda1, cert.N, cert.refinement_delta);
    out.payload["lambda2"] = io::measured(cert.lambda2, cert.N, sp.refinement_deltas.size() > 1 ? sp.refinement_deltas[1] : NAN);
    out.payload["alpha_n"] = io::measured(cert.alpha_n, cert.N, cert.refinement_delta);
    out.payload["witness"] = {{"y_i", cert.witness_inflection}, {"U_i", cert.U_i}};
    json wit = json::array();
    for (const auto& w : cert.witnesses) {
        json ev = json::array();
        for (double l : w.eigenvalues) ev.push_back(io::measured(l, cert.N, NAN));
        wit.push_back({{"y_i", w.y_i}, {"U_i", w.U_i}, {"eigenvalues", ev}});
    }
    out.payload["witnesses"] = wit;
    if (p.kind() == ProfileKind::oscillatory) {
        double q = rayleigh_quotient(prob, plateau_test_function(p.n()));
        out.payload["quotient_testfn"] = io::measured(q, cert.N, NAN);
        out.summary["quotient_testfn"] = q;
        if (std::isfinite(bound)) out.payload["bound_satisfied"] = cert.lambda1 <= bound;
    }
    out.summary["lambda1"] = cert.lambda1;
    out.summary["lambda2"] = cert.lambda2;
    out.summary["alpha_n"] = cert.alpha_n;
    out.provenance["refinement_delta"] = cert.refinement_delta;

    std::vector<std::string> head{"y"};
    for (std::size_t m = 0; m < sp.eigenfunctions.size(); ++m) head.push_back("phi_" + std::to_string(m + 1));
    io::Csv csv(head);
    for (Eigen::Index j = 0; j < prob.grid.size(); ++j) {
        std::vector<io::Cell> row{prob.grid[j]};
        for (const auto& f : sp.eigenfunctions) row.push_back(f[j]);
        csv.row(row);
    }
    out.files["sturm_eigenfunctions.csv"] = csv.str();
    return out;
}

// ---------------------------------------------------------------- rayleigh
inline Computed run_rayleigh(const RunConfig& cfg) {
    Computed out;
    ShearProfile p = make_profile(cfg, out.warnings);
    out.payload["profile"] = profile_json(p);
    RayleighOptions ro;
    ro.N = cfg.integer("N");
    ro.cauchy_tol = cfg.real("cauchy_tol");
    auto cert = certificate(p, 0);
    const double alpha = default_alpha(p, cfg.real("alpha"), "rayleigh");
    const double Ui = cert.witnesses.empty() ? 0.5 : cert.U_i;
    auto s = solve_rayleigh(p, alpha, {Ui, cfg.real("seed_im")}, ro);
    const int N = ro.N > 0 ? ro.N : rayleigh_grid_size(p);
    out.provenance["N"] = N;
    out.payload["alpha"] = alpha;
    out.payload["noise_floor"] = io::measured(s.noise_floor, N, NAN);
    out.payload["threshold"] = s.threshold;
    io::Csv spec({"Re_c", "Im_c"});
    std::vector<cplx> cs(s.spectrum.data(), s.spectrum.data() + s.spectrum.size());
    std::sort(cs.begin(), cs.end(), [](cplx a, cplx b) { return a.imag() != b.imag() ? a.imag() > b.imag() : a.real() < b.real(); });
    for (cplx c : cs) spec.row({c.real(), c.imag()});
    out.files["rayleigh_spectrum.csv"] = spec.str();
    if (!s.mode) throw NotUnstableError("rayleigh: no eigenvalue with Im c above the threshold " + io::fmt_short(s.threshold) + " at alpha=" + io::fmt_short(alpha));
    const EigenMode& m = *s.mode;
    out.payload["c"] = io::measured(m.c, m.N, m.refinement_delta);
    out.payload["residual"] = m.residual;
    out.payload["resolved"] = m.resolved;
    out.payload["growth_rate"] = io::measured(alpha * m.c.imag(), m.N, alpha * m.refinement_delta);
    if (!m.resolved) out.warnings.push_back("mode failed the two-grid test: |c_N - c_2N| = " + io::fmt_short(m.refinement_delta));
    out.summary = {{"alpha", alpha}, {"Re_c", m.c.real()}, {"Im_c", m.c.imag()}, {"resolved", m.resolved}};
    io::Csv mode({"y", "Re_phi", "Im_phi"});
    for (Eigen::Index j = 0; j < m.grid.size(); ++j) mode.row({m.grid[j], m.phi[j].real(), m.phi[j].imag()});
    out.files["rayleigh_mode.csv"] = mode.str();

    if (cfg.boolean("branch")) {
        if (!cert.unstable) throw NotUnstableError("rayleigh: branch continuation needs a certified unstable profile");
        auto br = continue_branch(p, cert, cfg.real("step"), cfg.integer("max_steps"), ro);
        io::Csv csv({"alpha", "Re_c", "Im_c", "residual", "refinement_delta", "resolved"});
        for (const auto& b : br.samples)
            csv.row({b.alpha, b.c.real(), b.c.imag(), b.residual, b.refinement_delta, static_cast<long long>(b.resolved)});
        out.files["rayleigh_branch.csv"] = csv.str();
        json ends = json::array();
        for (const auto& e : br.ends)
            ends.push_back({{"direction", e.direction}, {"closed", e.closed}, {"alpha", e.alpha}, {"last_imag", e.last_imag}, {"reason", e.reason}});
        json eps = json::array();
        for (double a : br.endpoints) eps.push_back(io::measured(a, N, NAN));
        out.payload["branch"] = {{"alpha_n", io::measured(br.alpha_n, cert.N, cert.refinement_delta)},
                                 {"endpoints", eps},
                                 {"ends", ends},
                                 {"threshold", br.threshold},
                                 {"max_growth_rate", io::measured(br.max_growth_rate, N, NAN)},
                                 {"samples", br.samples.size()},
                                 {"diagnostics", br.diagnostics}};
        out.summary["max_growth_rate"] = br.max_growth_rate;
        out.summary["closed_ends"] = static_cast<int>(br.endpoints.size());
        for (const auto& e : br.ends)
            if (!e.closed) out.warnings.push_back("branch end not closed: " + e.reason);
    }
    return out;
}

// ---------------------------------------------------------------- os
inline Computed run_os(const RunConfig& cfg) {
    Computed out;
    ShearProfile p = make_profile(cfg, out.warnings);
    out.payload["profile"] = profile_json(p);
    double alpha = cfg.real("alpha");
    if (alpha == 0.0) {
        auto cert = certificate(p, 0);
        alpha = cert.unstable ? 0.5 * cert.alpha_n : 1.0;
    }
    OSOptions oo;
    oo.agree_tol = cfg.real("agree_tol");
    OSProblem prob{p, alpha, cfg.real("R"), cfg.integer("N")};
    auto sp = solve_os(prob, oo);
    for (const auto& w : sp.warnings) out.warnings.push_back(w);
    out.provenance["N"] = sp.N;
    out.provenance["N_fine"] = sp.N_fine;
    out.payload["alpha"] = alpha;
    out.payload["R"] = prob.R;
    out.payload["max_imag_c"] = io::measured(sp.max_imag_all, sp.N, NAN);
    out.payload["noise_floor"] = io::measured(sp.noise_floor, sp.N, NAN);
    out.payload["threshold"] = sp.threshold;
    out.payload["retained"] = sp.modes.size();
    out.payload["discarded"] = sp.discarded.size();
    out.summary = {{"alpha", alpha}, {"R", prob.R}, {"max_imag_c", sp.max_imag_all}, {"retained", sp.modes.size()}};
    if (!sp.modes.empty()) {
        const auto& m = sp.modes.front();
        out.payload["most_unstable"] = {{"c", io::measured(m.c, m.N, m.refinement_delta)}, {"residual", m.residual}};
        out.summary["Re_c"] = m.c.real();
        out.summary["Im_c"] = m.c.imag();
        out.summary["unstable"] = m.c.imag() > sp.threshold;
    }
    io::Csv csv({"Re_c", "Im_c", "residual", "retained_flag", "refinement_delta", "tail"});
    for (const auto& m : sp.modes) csv.row({m.c.real(), m.c.imag(), m.residual, 1LL, m.refinement_delta, cheb::tail_ratio(m.phi)});
    std::vector<DiscardedMode> d = sp.discarded;
    std::sort(d.begin(), d.end(), [](const DiscardedMode& a, const DiscardedMode& b) {
        return a.c.imag() != b.c.imag() ? a.c.imag() > b.c.imag() : a.c.real() < b.c.real();
    });
    for (const auto& m : d) csv.row({m.c.real(), m.c.imag(), std::numeric_limits<double>::quiet_NaN(), 0LL, m.refinement_delta, m.tail});
    out.files["os_spectrum.csv"] = csv.str();

    auto schedule = cfg.reals("track");
    if (!schedule.empty()) {
        RayleighOptions ro;
        auto rs = solve_rayleigh(p, alpha, {0.5, 0.1}, ro);
        if (!rs.mode) throw NotUnstableError("os: no unstable Rayleigh mode at alpha=" + io::fmt_short(alpha) + " to track");
        const cplx c0 = rs.mode->c;
        TrackOptions to;
        to.os = oo;
        auto t = track_inviscid_limit(p, alpha, c0, schedule, to);
        std::vector<double> sob;
        for (int s : cfg.integers("sobolev")) sob.push_back(s);
        json path = json::array();
        io::Csv tc({"R", "Re_c", "Im_c", "N", "refinement_delta", "defect"});
        for (std::size_t i = 0; i < t.path.size(); ++i) {
            const auto& q = t.path[i];
            json norms = json::array();
            for (auto [s, v] : boundary_layer_diagnostic(t.modes[i], sob)) norms.push_back({{"s", s}, {"norm", io::measured(v, q.N, NAN)}});
            path.push_back({{"R", q.R}, {"c", io::measured(q.c, q.N, q.refinement_delta)}, {"defect", io::measured(q.defect, q.N, q.refinement_delta)}, {"sobolev", norms}});
            tc.row({q.R, q.c.real(), q.c.imag(), static_cast<long long>(q.N), q.refinement_delta, q.defect});
        }
        json growth = json::array();
        if (t.modes.size() >= 2)
            for (const auto& g : boundary_layer_growth(t.modes.front(), t.modes.back(), sob)) growth.push_back({{"s", g.s}, {"exponent", g.exponent}});
        out.payload["track"] = {{"c0", io::measured(c0, rs.mode->N, rs.mode->refinement_delta)},
                                {"path", path},
                                {"slope", nullable(t.slope)},
                                {"defect_decreased", t.defect_decreased},
                                {"truncated", t.truncated},
                                {"norm_growth", growth},
                                {"diagnostics", t.diagnostics}};
        out.files["os_track.csv"] = tc.str();
        out.summary["track_slope"] = nullable(t.slope);
        out.summary["defect_decreased"] = t.defect_decreased;
        if (t.path.empty()) throw NotUnstableError("os: no retained unstable OS mode along the R schedule");
        if (t.truncated) out.warnings.push_back("inviscid-limit track truncated: unstable mode lost");
    }
    return out;
}

// ---------------------------------------------------------------- catseye
inline Computed run_catseye(const RunConfig& cfg) {
    Computed out;
    ShearProfile p = make_profile(cfg, out.warnings);
    out.payload["profile"] = profile_json(p);
    require(p.kind() == ProfileKind::oscillatory, "catseye: profile must be oscillatory");
    auto cert = certificate(p, 0);
    if (!cert.unstable) throw NotUnstableError("catseye: profile is not certified unstable; no bifurcation point");
    auto F = build_f(p);
    const double rec = reconstruction_residual(F);
    const double beta = cfg.real("beta");
    const bool newton = cfg.text("order") == "newton";
    TravellingWave w = newton ? newton_branch(p, cert, beta, WaveGrid{cfg.integer("Nxi"), cfg.integer("Ny")}, NewtonOptions{cfg.real("newton_tol")})
                              : leading_order_wave(p, cert, beta, cfg.integer("Nxi"));
    const int Ny = static_cast<int>(w.y.size()) - 1;
    out.provenance["Nxi"] = static_cast<int>(w.xi.size()) - 1;
    out.provenance["Ny"] = Ny;
    out.payload["order"] = to_string(w.order);
    out.payload["beta"] = beta;
    out.payload["reconstruction_residual"] = io::measured(rec, 128, NAN);
    out.payload["alpha_sq"] = io::measured(w.alpha_sq, Ny, NAN);
    out.payload["alpha_n_sq"] = io::measured(w.alpha_n_sq, Ny, NAN);
    out.payload["period"] = io::measured(w.period(), Ny, NAN);
    out.payload["iterations"] = w.iterations;
    out.payload["residual"] = w.residual;

    auto cps = critical_points(w);
    json cj = json::array();
    int saddles = 0, centers = 0;
    for (const auto& c : cps) {
        cj.push_back({{"xi", c.xi}, {"y", c.y}, {"type", to_string(c.classification)}, {"hessian_det", c.hessian_det}, {"value", c.value}});
        saddles += c.classification == CriticalKind::saddle;
        centers += c.classification == CriticalKind::center;
    }
    out.payload["critical_points"] = cj;
    out.payload["saddles"] = saddles;
    out.payload["centers"] = centers;
    out.files["catseye_critical.json"] = json{{"critical_points", cj}}.dump(2) + "\n";
    out.summary = {{"beta", beta}, {"alpha_sq", w.alpha_sq}, {"alpha_n_sq", w.alpha_n_sq}, {"saddles", saddles}, {"centers", centers},
                   {"reconstruction_residual", rec}};

    io::Csv field({"xi", "y", "psi"});
    for (Eigen::Index i = 0; i < w.xi.size(); ++i)
        for (Eigen::Index j = 0; j < w.y.size(); ++j) field.row({w.xi[i], w.y[j], w.psi_rel(i, j)});
    out.files["catseye_field.csv"] = field.str();

    // evenly spaced levels plus every saddle level (the separatrix)
    ContourGrid cg{cfg.integer("contour_nxi"), cfg.integer("contour_ny")};
    SampledField sf = sample_wave(w, cg);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& col : sf.v)
        for (double v : col) lo = std::min(lo, v), hi = std::max(hi, v);
    std::vector<double> levels;
    const int L = cfg.integer("levels");
    for (int k = 0; k < L; ++k) levels.push_back(lo + (hi - lo) * (k + 0.5) / L);
    for (const auto& c : cps)
        if (c.classification == CriticalKind::saddle) levels.push_back(c.value);
    std::vector<Polyline> lines;
    for (double l : levels)
        for (auto& pl : contour_level(sf, l)) lines.push_back(std::move(pl));
    io::Csv cc({"level", "segment_id", "xi", "y"});
    for (std::size_t s = 0; s < lines.size(); ++s)
        for (const auto& [x, y] : lines[s].points) cc.row({lines[s].level, static_cast<long long>(s), x, y});
    out.files["catseye_contours.csv"] = cc.str();
    out.files["catseye_streamlines.svg"] =
        io::streamlines_svg(lines, "streamlines n=" + std::to_string(p.n()) + " A=" + io::fmt_short(p.amplitude()) + " beta=" + io::fmt_short(beta));
    out.payload["contour_segments"] = lines.size();
    return out;
}

// ---------------------------------------------------------------- drift
inline Computed run_drift(const RunConfig& cfg) {
    Computed out;
    ShearProfile p = make_profile(cfg, out.warnings);
    DriftParams d{cfg.real("epsilon"), cfg.real("t")};
    ShearProfile q = drift(p, d);
    out.payload["profile"] = profile_json(p);
    out.payload["drifted"] = profile_json(q);
    out.payload["epsilon"] = d.epsilon;
    out.payload["t"] = d.t;
    const int S = cfg.integer("samples");
    io::Csv csv({"y", "U", "U_y", "U_yy", "U0"});
    double dev = 0.0;
    for (int j = 0; j < S; ++j) {
        double y = static_cast<double>(j) / (S - 1);
        csv.row({y, q.eval(y, 0), q.eval(y, 1), q.eval(y, 2), p.eval(y, 0)});
        dev = std::max(dev, std::abs(q.eval(y, 0) - y));
    }
    out.files["drift.csv"] = csv.str();
    out.payload["max_deviation_from_linear"] = io::measured(dev, S, NAN);
    out.summary = {{"max_deviation_from_linear", dev}};
    if (q.kind() == ProfileKind::oscillatory) {
        out.summary["A_t"] = q.amplitude();
        out.summary["in_window"] = q.window().in_window;
    }
    return out;
}

// ---------------------------------------------------------------- shear3d
inline Computed run_shear3d(const RunConfig& cfg) {
    Computed out;
    ShearProfile p = make_profile(cfg, out.warnings);
    out.payload["profile"] = profile_json(p);
    const double alpha0 = default_alpha(p, cfg.real("alpha0"), "shear3d");
    StripGrid g;
    g.Ny = cfg.integer("Ny") > 0 ? cfg.integer("Ny") : 128;
    g.Nz = cfg.integer("Nz");
    g.Lz = cfg.real("Lz");
    Solve3DOptions so;
    so.tail_tol = cfg.real("tail_tol");
    auto eps = cfg.reals("eps");
    require(!eps.empty(), "shear3d: eps list is empty");
    auto t = persistence_sweep(p, default_gshape(g.Lz), eps, alpha0, g, so, cfg.integer("workers"), cfg.text("map") == "auto");
    out.provenance["grid"] = {{"Ny", t.grid.Ny}, {"Nz", t.grid.Nz}, {"Lz", t.grid.Lz}, {"map_center", t.grid.map_center}, {"map_strength", t.grid.map_strength}};
    out.payload["alpha0"] = alpha0;
    out.payload["c0"] = io::measured(t.c0, rayleigh_grid_size(p), NAN);
    out.payload["gshape"] = "sin(pi y) cos(2 pi z / Lz)";
    out.payload["defect_increasing"] = t.defect_increasing;
    io::Csv csv({"eps", "lost", "Re_c", "Im_c", "defect", "w14", "method", "max_invariant", "max_equation", "tail_y", "tail_z", "threshold"});
    json rows = json::array();
    int lost = 0;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        lost += r.lost;
        const double rd = t.modes[i] ? t.modes[i]->refinement_delta : NAN;
        csv.row({r.eps, static_cast<long long>(r.lost), r.c.real(), r.c.imag(), r.defect, r.w14, r.method, r.max_invariant, r.max_equation, r.tail_y, r.tail_z, r.threshold});
        json row{{"eps", r.eps}, {"lost", r.lost}, {"method", r.method}, {"w14", r.w14}, {"threshold", r.threshold}};
        if (!r.lost) {
            row["c"] = io::measured(r.c, t.grid.Ny, rd);
            row["defect"] = io::measured(r.defect, t.grid.Ny, rd);
            row["max_invariant"] = r.max_invariant;
            row["max_equation"] = r.max_equation;
            row["tail_y"] = r.tail_y;
            row["tail_z"] = r.tail_z;
            const auto& m = *t.modes[i];
            io::Csv f({"z", "y", "Re_u", "Im_u", "Re_v", "Im_v", "Re_w", "Im_w", "Re_P", "Im_P"});
            Strip s(t.grid);
            for (int a = 0; a < s.Nz(); ++a)
                for (int b = 0; b < s.n1(); ++b)
                    f.row({s.z()[a], s.y()[b], m.u(a, b).real(), m.u(a, b).imag(), m.v(a, b).real(), m.v(a, b).imag(), m.w(a, b).real(),
                           m.w(a, b).imag(), m.P(a, b).real(), m.P(a, b).imag()});
            std::string name = "shear3d_mode_" + std::to_string(i) + ".csv";
            out.files[name] = f.str();
            row["field_file"] = name;
        } else {
            out.warnings.push_back("instability lost at eps=" + io::fmt_short(r.eps));
        }
        rows.push_back(row);
    }
    out.payload["rows"] = rows;
    out.files["shear3d_sweep.csv"] = csv.str();
    out.summary = {{"alpha0", alpha0}, {"Re_c0", t.c0.real()}, {"Im_c0", t.c0.imag()}, {"lost", lost}, {"defect_increasing", t.defect_increasing}};
    if (!t.rows.empty() && !t.rows.back().lost) out.summary["Im_c_last"] = t.rows.back().c.imag();
    if (lost) out.exit_code = no_instability;
    return out;
}

inline std::string context(const std::string& cmd, const std::string& msg) {
    return msg.rfind(cmd + ":", 0) == 0 ? msg : cmd + ": " + msg;
}

inline int classify(std::exception_ptr e, std::string& msg) {
    try {
        std::rethrow_exception(e);
    } catch (const ConfigError& x) {
        msg = x.what();
        return config_error;
    } catch (const NotUnstableError& x) {
        msg = x.what();
        return no_instability;
    } catch (const ConvergenceError& x) {
        msg = x.what();
        return no_convergence;
    } catch (const DomainError& x) {
        msg = x.what();
        return config_error;
    } catch (const BoundError& x) {
        msg = x.what();
        return config_error;
    } catch (const std::exception& x) {
        msg = x.what();
        return internal_error;
    }
}

inline Computed run_sweep(const RunConfig& cfg, std::ostream* log);

inline Computed dispatch(const RunConfig& cfg, std::ostream* log) {
    const std::string& c = cfg.subcommand();
    if (c == "sturm") return run_sturm(cfg);
    if (c == "rayleigh") return run_rayleigh(cfg);
    if (c == "os") return run_os(cfg);
    if (c == "catseye") return run_catseye(cfg);
    if (c == "drift") return run_drift(cfg);
    if (c == "shear3d") return run_shear3d(cfg);
    if (c == "sweep") return run_sweep(cfg, log);
    throw ConfigError("unknown subcommand '" + c + "'");
}

inline io::ResultRecord envelope(const RunConfig& cfg, Computed&& c) {
    io::ResultRecord r;
    r.input_hash = cfg.input_hash();
    r.subcommand = cfg.subcommand();
    r.config = cfg.canonical_json();
    r.created = io::utc_timestamp();
    c.payload["summary"] = c.summary;
    c.payload["exit_code"] = c.exit_code;
    r.payload = std::move(c.payload);
    c.provenance["generator"] = "shearspec";
    r.provenance = std::move(c.provenance);
    r.warnings = std::move(c.warnings);
    r.side_files = std::move(c.files);
    return r;
}

// cached compute without writing output files
inline Outcome cached(const RunConfig& cfg, std::ostream* log) {
    Outcome o;
    try {
        cfg.validate();
    } catch (...) {
        o.exit_code = classify(std::current_exception(), o.error);
        return o;
    }
    const bool use_cache = cfg.boolean("cache");
    io::ResultCache cache(io::cache_root(cfg.text("out")), log);
    if (use_cache)
        if (auto hit = cache.lookup(cfg.input_hash())) {
            o.record = std::move(*hit);
            o.from_cache = true;
            o.exit_code = o.record.payload.value("exit_code", 0);
            return o;
        }
    try {
        Computed c = dispatch(cfg, log);
        o.exit_code = c.exit_code;
        o.record = envelope(cfg, std::move(c));
    } catch (...) {
        o.exit_code = classify(std::current_exception(), o.error);
        o.error = context(cfg.subcommand(), o.error);
        return o;
    }
    if (use_cache) {
        try {
            cache.store(o.record);
        } catch (const std::exception& e) {
            if (log) *log << "warning: could not store cache entry: " << e.what() << "\n";
        }
    }
    return o;
}

// cartesian product of the axes; the last axis varies fastest
inline Computed run_sweep(const RunConfig& cfg, std::ostream* log) {
    Computed out;
    const std::string task = cfg.text("task");
    auto axes = parse_axes(cfg.text("over"));
    std::vector<RunConfig> points;
    std::vector<std::vector<std::string>> values;
    std::size_t total = 1;
    for (const auto& a : axes) total *= a.second.size();
    for (std::size_t idx = 0; idx < total; ++idx) {
        RunConfig pc(task);
        for (const auto& [k, v] : cfg.values())
            if (k != "task" && k != "over" && pc.has(k)) pc.set(k, v);
        std::vector<std::string> vals(axes.size());
        std::size_t rem = idx;
        for (std::size_t a = axes.size(); a-- > 0;) {
            vals[a] = axes[a].second[rem % axes[a].second.size()];
            rem /= axes[a].second.size();
            const KeySpec* ks = find_key(axes[a].first);
            if (!ks || !key_applies(*ks, task) || !pc.has(axes[a].first))
                throw ConfigError("sweep: axis '" + axes[a].first + "' is not a key of " + task);
            pc.set(axes[a].first, vals[a]);
        }
        pc.validate();
        points.push_back(std::move(pc));
        values.push_back(std::move(vals));
    }

    std::vector<Outcome> results(points.size());
    unsigned nw = cfg.integer("workers") > 0 ? static_cast<unsigned>(cfg.integer("workers"))
                                              : std::max(1u, std::thread::hardware_concurrency());
    nw = std::min<unsigned>(nw, static_cast<unsigned>(points.size()));
    std::mutex log_mu;
    auto work = [&](std::size_t i) {
        std::ostringstream local;
        results[i] = cached(points[i], &local);
        std::lock_guard<std::mutex> lk(log_mu);
        if (log && !local.str().empty()) *log << local.str();
    };
    if (nw <= 1) {
        for (std::size_t i = 0; i < points.size(); ++i) work(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < nw; ++w)
            pool.emplace_back([&] {
                for (std::size_t i; (i = next++) < points.size();) work(i);
            });
        for (auto& th : pool) th.join();
    }

    // merge in point order, independent of completion order
    std::set<std::string> keys;
    for (const auto& r : results)
        if (r.error.empty())
            for (const auto& [k, v] : r.record.payload.at("summary").items()) keys.insert(k);
    std::vector<std::string> head;
    for (const auto& a : axes) head.push_back(a.first);
    head.insert(head.end(), {"input_hash", "exit_code"});
    head.insert(head.end(), keys.begin(), keys.end());
    head.push_back("error");
    io::Csv csv(head);
    json pts = json::array();
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        std::vector<io::Cell> row(values[i].begin(), values[i].end());
        row.push_back(points[i].input_hash());
        row.push_back(static_cast<long long>(r.exit_code));
        json params = json::object();
        for (std::size_t a = 0; a < axes.size(); ++a) params[axes[a].first] = values[i][a];
        json pj{{"params", params}, {"input_hash", points[i].input_hash()}, {"exit_code", r.exit_code}};
        json summary = r.error.empty() ? r.record.payload.at("summary") : json::object();
        for (const auto& k : keys) {
            if (!summary.contains(k) || summary[k].is_null()) {
                row.push_back(std::string());
            } else if (summary[k].is_boolean()) {
                row.push_back(static_cast<long long>(summary[k].get<bool>()));
            } else if (summary[k].is_number_integer()) {
                row.push_back(summary[k].get<long long>());
            } else if (summary[k].is_number()) {
                row.push_back(summary[k].get<double>());
            } else {
                row.push_back(summary[k].dump());
            }
        }
        std::string err = r.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        row.push_back(err);
        csv.row(row);
        pj["summary"] = summary;
        if (!r.error.empty()) pj["error"] = r.error;
        for (const auto& w : r.record.warnings) out.warnings.push_back("point " + std::to_string(i) + ": " + w);
        pts.push_back(pj);
        if (r.exit_code != ok && out.exit_code == ok) out.exit_code = r.exit_code;
    }
    out.payload["task"] = task;
    out.payload["points"] = pts;
    out.files["sweep.csv"] = csv.str();
    int failed = 0;
    for (const auto& r : results) failed += r.exit_code != ok;
    out.summary = {{"points", results.size()}, {"failed", failed}};
    return out;
}

}  // namespace detail

// one pipeline, no cache and no files; throws on failure
inline io::ResultRecord compute(const RunConfig& cfg, int* exit_code = nullptr) {
    cfg.validate();
    detail::Computed c = detail::dispatch(cfg, nullptr);
    if (exit_code) *exit_code = c.exit_code;
    return detail::envelope(cfg, std::move(c));
}

// validation, cache, dispatch, output files and exit code
inline Outcome run(const RunConfig& cfg, std::ostream* log = &std::cerr) {
    Outcome o = detail::cached(cfg, log);
    if (!o.error.empty()) return o;
    namespace fs = std::filesystem;
    try {
        fs::path out = cfg.text("out");
        io::write_text(out / (cfg.subcommand() + ".json"), o.record.to_json().dump(2) + "\n");
        for (const auto& [name, content] : o.record.side_files) io::write_text(out / name, content);
    } catch (const std::exception& e) {
        o.error = std::string("writing output: ") + e.what();
        o.exit_code = internal_error;
    }
    return o;
}

}  // namespace shearspec::cli
