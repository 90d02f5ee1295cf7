#include "commands.hpp"

#include "iqcloc/admm.hpp"
#include "iqcloc/analysis.hpp"
#include "iqcloc/error.hpp"
#include "iqcloc/grouping.hpp"
#include "iqcloc/localization.hpp"
#include "iqcloc/synthesis.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace iqcloc::cli {

namespace {

// Relative bound on the largest eigenvalue of a replayed LMI.
constexpr double kLmiTol = 1e-6;

bool negative_answer(ErrorKind k) {
    return k == ErrorKind::Infeasible || k == ErrorKind::InfeasibleAtHi || k == ErrorKind::SeedInfeasible;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

Options effective(const Options& base, const Flags& f) {
    Options o = base;
    if (f.tol) o.tol = *f.tol;
    if (f.gamma_lo) o.gamma_lo = *f.gamma_lo;
    if (f.gamma_hi) o.gamma_hi = *f.gamma_hi;
    if (f.max_iter) o.max_iter = *f.max_iter;
    if (f.seed) o.seed = *f.seed;
    if (f.grid) o.grid = *f.grid;
    if (f.mode) o.mode = *f.mode;
    require(o.mode == "blockdiag" || o.mode == "fullblock", ErrorKind::InvalidArgument,
            "mode must be blockdiag or fullblock");
    require(o.tol > 0.0, ErrorKind::InvalidArgument, "tol must be positive");
    return o;
}

json options_json(const Options& o) {
    json j = {{"tol", o.tol},       {"gamma_lo", o.gamma_lo}, {"res_tol", o.res_tol}, {"rho", o.rho},
              {"mode", o.mode},     {"ng", o.ng},             {"nbar", o.nbar},       {"seed", o.seed},
              {"grid", o.grid},     {"epsilon", o.epsilon}};
    j["gamma_hi"] = o.gamma_hi ? json(*o.gamma_hi) : json(nullptr);
    j["max_iter"] = o.max_iter ? json(*o.max_iter) : json(nullptr);
    return j;
}

QuadMultiplier objective_of(const Subsystem& s) {
    return s.objective ? *s.objective : l2gain_quad(s.plant.n_v(), s.plant.n_y());
}

// Preset multipliers without gamma dependence (passivity) need no bisection.
bool gamma_free(const QuadMultiplier& q) { return q.X1.norm() == 0.0 && q.X2.norm() == 0.0; }

const Interconnection& need_interconnection(const Problem& pr, const std::string& command) {
    require(pr.interconnection.has_value(), ErrorKind::InvalidArgument,
            command + " needs an interconnection in the problem file");
    return *pr.interconnection;
}

QuadMultiplier global_of(const Problem& pr) {
    const Interconnection& m = *pr.interconnection;
    return pr.global_objective ? *pr.global_objective : l2gain_quad(m.n_w(), m.n_z());
}

double upper_level(const ClosedLoop& sys, const Options& o) {
    if (o.gamma_hi) return *o.gamma_hi;
    const double g = is_hurwitz(sys.A) ? freq_gain_oracle(sys) : 0.0;
    return std::max(1e3, 10.0 * g);
}

json storage_json(const std::string& label, double gamma, const ClosedLoop& sys, const StorageCertificate& c) {
    return {{"kind", "storage"},
            {"label", label},
            {"gamma", number_or_null(gamma)},
            {"system", to_json(sys)},
            {"multiplier", to_json(c.multiplier)},
            {"P", to_json(c.P)},
            {"lmi_residual", c.feas_residual}};
}

json admissibility_json(const Interconnection& m, const JointMultiplier& x, const QuadMultiplier& wq,
                        double distance) {
    return {{"kind", "admissibility"},
            {"interconnection", to_json(m)},
            {"joint", {{"X1", to_json(x.X1)}, {"X2", to_json(x.X2)}, {"X3", to_json(x.X3)}}},
            {"global", to_json(wq)},
            {"distance", distance}};
}

struct Level {
    double gamma = std::numeric_limits<double>::infinity();
    StorageCertificate cert;
};

bool satisfies(const ClosedLoop& sys, const Multiplier& x) {
    try {
        iqc_analysis(sys, x);
        return true;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::Infeasible) throw;
        return false;
    }
}

// Smallest level at which the closed loop satisfies q, with its storage.
// Monotone multipliers are bisected; others are swept on a geometric grid of
// o.grid points (64 when unset) and the first feasible cell is bisected.
Level local_level(const ClosedLoop& sys, const QuadMultiplier& q, const Options& o) {
    Level out;
    const SynthesisOptions so;
    const double hi = upper_level(sys, o);
    if (gamma_free(q)) {
        out.gamma = 0.0;
    } else if (is_monotone_on(q, o.gamma_lo, hi, so.monotone_points)) {
        out.gamma = bisect_gamma(sys, q, o.gamma_lo, hi, so).gamma;
    } else {
        const int points = o.grid > 1 ? o.grid : 64;
        const double first = std::max(o.gamma_lo, 1e-6 * hi);
        double prev = o.gamma_lo;
        bool found = false;
        for (int k = 0; k < points && !found; ++k) {
            const double g = first * std::pow(hi / first, static_cast<double>(k) / (points - 1));
            if (satisfies(sys, eval(q, g))) {
                out.gamma = bisect(prev, g, so.bisect_tol, [&](double t) { return satisfies(sys, eval(q, t)); }).gamma;
                found = true;
            }
            prev = g;
        }
        if (!found) fail(ErrorKind::InfeasibleAtHi, "no feasible level on the sweep up to gamma = " + std::to_string(hi));
    }
    out.cert = iqc_analysis(sys, eval(q, out.gamma));
    return out;
}

ClosedLoop parallel(const std::vector<ClosedLoop>& parts) {
    std::vector<Mat> a, b, c, d;
    for (const auto& p : parts) {
        a.push_back(p.A);
        b.push_back(p.B);
        c.push_back(p.C);
        d.push_back(p.D);
    }
    return {blkdiag(a), blkdiag(b), blkdiag(c), blkdiag(d)};
}

// Joint block of a group, reordered to (v of members, y of members).
QuadMultiplier group_quad(const Interconnection& m, const JointMultiplier& x, const std::vector<int>& members) {
    std::vector<int> v_idx, y_idx;
    for (int i : members) {
        int off = 0;
        for (int k = 0; k < i; ++k) off += m.port_dim(k);
        for (int r = 0; r < m.nv_parts[i]; ++r) v_idx.push_back(off + r);
        for (int r = 0; r < m.ny_parts[i]; ++r) y_idx.push_back(off + m.nv_parts[i] + r);
    }
    std::vector<int> idx = v_idx;
    idx.insert(idx.end(), y_idx.begin(), y_idx.end());
    QuadMultiplier q;
    q.X1 = x.X1(idx, idx);
    q.X2 = x.X2(idx, idx);
    q.X3 = x.X3(idx, idx);
    q.n_in = static_cast<int>(v_idx.size());
    return q;
}

std::vector<ClosedLoop> channels(const Problem& pr) {
    std::vector<ClosedLoop> out;
    for (const auto& s : pr.subsystems) out.push_back(open_loop_channel(s.plant));
    return out;
}

std::string group_label(const Problem& pr, const std::vector<int>& members) {
    std::string s;
    for (int i : members) s += (s.empty() ? "" : "+") + pr.subsystems[i].name;
    return s;
}

// Local levels per group, the global level of the composed system and their
// gap. Failures leave the affected values null and are noted.
void levels_and_gap(const Problem& pr, const JointMultiplier& x, const Groups& groups, const QuadMultiplier& wq,
                    const Options& o, json& results, json& certificates) {
    const Interconnection& m = *pr.interconnection;
    const std::vector<ClosedLoop> parts = channels(pr);
    json notes = json::array();
    json locals = json::array();
    double gamma_l = 0.0;
    for (const auto& g : groups) {
        std::vector<ClosedLoop> members;
        for (int i : g) members.push_back(parts[i]);
        const ClosedLoop sys = parallel(members);
        const std::string label = group_label(pr, g);
        try {
            const Level lv = local_level(sys, group_quad(m, x, g), o);
            gamma_l = std::max(gamma_l, lv.gamma);
            locals.push_back({{"group", label}, {"gamma", lv.gamma}});
            certificates.push_back(storage_json(label, lv.gamma, sys, lv.cert));
        } catch (const Error& e) {
            gamma_l = std::numeric_limits<double>::infinity();
            locals.push_back({{"group", label}, {"gamma", nullptr}});
            notes.push_back(label + ": " + e.what());
        }
    }
    double gamma_g = std::numeric_limits<double>::infinity();
    try {
        const ClosedLoop whole = compose(m, parts);
        gamma_g = gamma_free(wq) ? 0.0 : bisect_gamma(whole, wq, o.gamma_lo, upper_level(whole, o)).gamma;
    } catch (const Error& e) {
        notes.push_back(std::string("global: ") + e.what());
    }
    results["local_levels"] = locals;
    results["gamma_L"] = number_or_null(gamma_l);
    results["gamma_G"] = number_or_null(gamma_g);
    json gap = nullptr;
    if (std::isfinite(gamma_l) && std::isfinite(gamma_g)) {
        // Both levels are bisection upper ends; a shortfall within the
        // bisection tolerance is rounding, not a violation.
        const double slack = 2.0 * SynthesisOptions{}.bisect_tol * std::max(1.0, gamma_g);
        const double gl = gamma_l < gamma_g && gamma_g - gamma_l <= slack ? gamma_g : gamma_l;
        try {
            gap = localization_gap(gl, gamma_g);
        } catch (const Error& e) {
            notes.push_back(std::string("gap: ") + e.what());
        }
    }
    results["gap"] = gap;
    if (!notes.empty()) results["notes"] = notes;
}

json multipliers_json(const Problem& pr, const LocalProblemSet& qs) {
    json out = json::array();
    for (std::size_t i = 0; i < qs.size(); ++i) {
        json q = to_json(qs[i]);
        q["name"] = pr.subsystems[i].name;
        out.push_back(q);
    }
    return out;
}

json cmd_analyze(const Problem& pr, const Options& o, json& certs, Exit& exit) {
    json rows = json::array();
    for (const auto& s : pr.subsystems) {
        const ClosedLoop sys = open_loop_channel(s.plant);
        try {
            const Level lv = local_level(sys, objective_of(s), o);
            rows.push_back({{"name", s.name}, {"status", "feasible"}, {"gamma", lv.gamma}});
            certs.push_back(storage_json(s.name, lv.gamma, sys, lv.cert));
        } catch (const Error& e) {
            if (!negative_answer(e.kind())) throw;
            rows.push_back({{"name", s.name}, {"status", "infeasible"}, {"message", e.what()}});
            exit = Exit::Negative;
        }
    }
    return {{"subsystems", rows}};
}

json cmd_synthesize(const Problem& pr, const Options& o, json& certs, Exit& exit) {
    json rows = json::array();
    for (const auto& s : pr.subsystems) {
        try {
            const double hi = o.gamma_hi ? *o.gamma_hi : default_gamma_interval(s.plant).second;
            const SynthesisResult r = synthesize(s.plant, objective_of(s), o.gamma_lo, hi);
            const ClosedLoop cl = close_loop(s.plant, r.controller);
            rows.push_back({{"name", s.name},
                            {"status", "feasible"},
                            {"gamma_star", r.gamma_star},
                            {"gamma", r.gamma},
                            {"closed_loop_gain", number_or_null(is_hurwitz(cl.A) ? freq_gain_oracle(cl)
                                                                                 : std::nan(""))},
                            {"controller", to_json(r.controller)}});
            certs.push_back(storage_json(s.name, r.gamma, cl, r.cert));
        } catch (const Error& e) {
            if (!negative_answer(e.kind())) throw;
            rows.push_back({{"name", s.name}, {"status", "infeasible"}, {"message", e.what()}});
            exit = Exit::Negative;
        }
    }
    return {{"subsystems", rows}};
}

json cmd_admissible(const Problem& pr, const Options& o, json& certs, Exit& exit, std::string& status) {
    const Interconnection& m = need_interconnection(pr, "admissible");
    const QuadMultiplier wq = global_of(pr);
    LocalProblemSet qs;
    for (const auto& s : pr.subsystems) qs.push_back(s.multiplier ? *s.multiplier : objective_of(s));
    const double hi = o.gamma_hi ? *o.gamma_hi : 10.0;
    const AdmissibilityReport rep = check_admissible(m, qs, wq, GacMode::Quadratic, o.tol, o.grid, o.gamma_lo, hi);
    json res = {{"admissible", rep.admissible}, {"lambda_max", rep.lambda_max}, {"grid_points", rep.grid_points},
                {"grid_ok", rep.grid_ok}};
    if (rep.admissible) {
        const double d = sigma_max(gac_quadratic(m, qs, wq));
        res["distance"] = d;
        certs.push_back(admissibility_json(m, joint(qs), wq, d));
        status = "admissible";
    } else {
        res["distance"] = nullptr;
        status = "not admissible";
        exit = Exit::Negative;
    }
    return res;
}

json cmd_localize(const Problem& pr, const Options& o, json& certs) {
    const Interconnection& m = need_interconnection(pr, "localize");
    const QuadMultiplier wq = global_of(pr);
    LocalizationOptions lo;
    lo.mode = o.mode == "fullblock" ? StructureMode::FullBlock : StructureMode::BlockDiagonal;
    const Localization loc = closest_localization(m, wq, lo);
    json res = {{"mode", o.mode},
                {"distance", loc.distance},
                {"exact", loc.exact},
                {"t_star", loc.t_star},
                {"multipliers", multipliers_json(pr, loc.multipliers)}};
    if (lo.mode == StructureMode::FullBlock)
        res["joint"] = {{"X1", to_json(loc.joint.X1)}, {"X2", to_json(loc.joint.X2)}, {"X3", to_json(loc.joint.X3)}};
    certs.push_back(admissibility_json(m, loc.joint, wq, loc.distance));
    Groups groups;
    if (lo.mode == StructureMode::FullBlock) {
        groups.emplace_back();
        for (int i = 0; i < m.count(); ++i) groups.back().push_back(i);
    } else {
        for (int i = 0; i < m.count(); ++i) groups.push_back({i});
    }
    levels_and_gap(pr, loc.joint, groups, wq, o, res, certs);
    return res;
}

json cmd_group(const Problem& pr, const Options& o, json& certs, json& traces) {
    const Interconnection& m = need_interconnection(pr, "group");
    const QuadMultiplier wq = global_of(pr);
    GroupOptions go;
    if (o.max_iter) go.max_iter = *o.max_iter;
    const GroupLocalization r = group_localize(m, wq, o.ng, o.nbar, go);
    json groups = json::array();
    for (const auto& g : r.groups) {
        json names = json::array();
        for (int i : g) names.push_back(pr.subsystems[i].name);
        groups.push_back(names);
    }
    json res = {{"groups", groups},
                {"distance", r.distance},
                {"iterations", r.iterations},
                {"converged", r.converged},
                {"P", to_json(r.P)},
                {"relaxed_P", to_json(r.relaxed_P)},
                {"joint",
                 {{"X1", to_json(r.multipliers.X1)}, {"X2", to_json(r.multipliers.X2)}, {"X3", to_json(r.multipliers.X3)}}}};
    traces["distance_before"] = r.distance_before;
    traces["distance_after"] = r.distance_after;
    certs.push_back(admissibility_json(m, r.multipliers, wq, r.distance));
    levels_and_gap(pr, r.multipliers, r.groups, wq, o, res, certs);
    return res;
}

json cmd_admm(const Problem& pr, const Options& o, json& certs, json& traces, Exit& exit, std::string& status) {
    const Interconnection& m = need_interconnection(pr, "admm");
    const QuadMultiplier wq = global_of(pr);
    std::vector<StateSpace> plants;
    for (const auto& s : pr.subsystems) plants.push_back(s.plant);
    AdmmOptions ao;
    ao.rho = o.rho;
    ao.res_tol = o.res_tol;
    if (o.max_iter) ao.max_iter = *o.max_iter;
    if (o.gamma_hi) ao.gamma_hi = *o.gamma_hi;
    const AdmmResult r = admm_solve(m, wq, plants, ao);
    json xs = json::array();
    for (std::size_t i = 0; i < r.multipliers.size(); ++i) {
        json x = to_json(r.multipliers[i]);
        x["name"] = pr.subsystems[i].name;
        xs.push_back(x);
    }
    json res = {{"converged", r.status == AdmmStatus::Converged},
                {"gamma", number_or_null(r.gamma)},
                {"iterations", r.state.iter},
                {"primal_residual", r.state.primal_res},
                {"dual_residual", r.state.dual_res},
                {"multipliers", xs}};
    traces["primal"] = r.state.primal_trace;
    traces["dual"] = r.state.dual_trace;
    traces["gamma"] = r.state.gamma_trace;
    for (std::size_t i = 0; i < plants.size(); ++i)
        certs.push_back(storage_json(pr.subsystems[i].name, r.gamma, open_loop_channel(plants[i]), r.certificates[i]));
    if (std::isfinite(r.gamma)) {
        json ms = json::array();
        for (const auto& x : r.multipliers) ms.push_back(to_json(x));
        certs.push_back({{"kind", "gac"},
                         {"interconnection", to_json(m)},
                         {"multipliers", ms},
                         {"gamma", r.gamma},
                         {"global", to_json(eval(wq, r.gamma))}});
        status = r.status == AdmmStatus::Converged ? "converged" : "max_iter";
    } else {
        status = "not certified";
        exit = Exit::Negative;
    }
    return res;
}

// Certificate replay.

ClosedLoop read_system(const Reader& rd, const json& v, const std::string& p) {
    rd.only_keys(v, p, {"n", "n_v", "n_y", "A", "B", "C", "D"});
    const int n = rd.count(rd.object(v, p, "n"), child(p, "n"));
    const int nv = rd.count(rd.object(v, p, "n_v"), child(p, "n_v"));
    const int ny = rd.count(rd.object(v, p, "n_y"), child(p, "n_y"));
    ClosedLoop s;
    s.A = rd.matrix(rd.object(v, p, "A"), child(p, "A"), n, n, "A");
    s.B = rd.matrix(rd.object(v, p, "B"), child(p, "B"), n, nv, "B");
    s.C = rd.matrix(rd.object(v, p, "C"), child(p, "C"), ny, n, "C");
    s.D = rd.matrix(rd.object(v, p, "D"), child(p, "D"), ny, nv, "D");
    return s;
}

Multiplier read_multiplier(const Reader& rd, const json& v, const std::string& p) {
    rd.only_keys(v, p, {"n_in", "X", "name"});
    const int n_in = rd.count(rd.object(v, p, "n_in"), child(p, "n_in"));
    const Mat x = rd.matrix(rd.object(v, p, "X"), child(p, "X"));
    try {
        return Multiplier(x, n_in);
    } catch (const Error& e) {
        rd.error(e.kind(), child(p, "X"), e.what());
    }
}

Signal replay_signal(std::mt19937& rng, int width) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Signal s;
    s.dt = 1e-2;
    for (int k = 0; k < 1000; ++k) {
        Vec w(width);
        for (int i = 0; i < width; ++i) w(i) = nd(rng);
        s.samples.push_back(w);
    }
    return s;
}

json replay_storage(const Reader& rd, const json& c, const std::string& p, std::mt19937& rng) {
    rd.only_keys(c, p, {"kind", "label", "gamma", "system", "multiplier", "P", "lmi_residual"});
    const ClosedLoop sys = read_system(rd, rd.object(c, p, "system"), child(p, "system"));
    StorageCertificate cert;
    cert.multiplier = read_multiplier(rd, rd.object(c, p, "multiplier"), child(p, "multiplier"));
    cert.P = rd.matrix(rd.object(c, p, "P"), child(p, "P"), sys.n(), sys.n(), "P");
    const double scale = std::max({1.0, max_abs(cert.P), max_abs(cert.multiplier.matrix())});
    const double lmi = sys.n() + sys.n_v() == 0 ? 0.0 : lambda_max(dissipation_lmi(sys, cert.multiplier, cert.P));
    const double pmin = sys.n() == 0 ? 0.0 : lambda_min(cert.P);
    double traj = 0.0;
    for (int k = 0; k < 3; ++k)
        traj = std::max(traj, dissipation_residual(sys, cert, replay_signal(rng, sys.n_v())));
    const bool ok = lmi <= kLmiTol * scale && pmin >= -kLmiTol * scale && traj <= kReplayTol;
    json out = {{"kind", "storage"}, {"ok", ok}, {"lmi_max", lmi}, {"P_min", pmin}, {"trajectory_residual", traj}};
    if (const json* l = rd.optional(c, "label")) out["label"] = *l;
    return out;
}

json replay_admissibility(const Reader& rd, const json& c, const std::string& p, double tol) {
    rd.only_keys(c, p, {"kind", "interconnection", "joint", "global", "distance"});
    const Interconnection m = rd.interconnection(rd.object(c, p, "interconnection"), child(p, "interconnection"));
    const std::string jp = child(p, "joint");
    const json& jv = rd.object(c, p, "joint");
    rd.only_keys(jv, jp, {"X1", "X2", "X3"});
    const int d = m.total_port_dim();
    JointMultiplier x;
    x.X1 = rd.matrix(rd.object(jv, jp, "X1"), child(jp, "X1"), d, d, "X1");
    x.X2 = rd.matrix(rd.object(jv, jp, "X2"), child(jp, "X2"), d, d, "X2");
    x.X3 = rd.matrix(rd.object(jv, jp, "X3"), child(jp, "X3"), d, d, "X3");
    const QuadMultiplier wq =
        rd.quad(rd.object(c, p, "global"), child(p, "global"), m.n_w(), m.n_z(), "global", 0.0);
    const double stored = rd.number(rd.object(c, p, "distance"), child(p, "distance"));
    const Mat g = gac_quadratic(m, local_lift(m, x), wq);
    const double top = lambda_max(g);
    const double dist = sigma_max(g);
    const bool ok = top <= tol * std::max(1.0, max_abs(g)) && std::abs(dist - stored) <= 1e-6 * std::max(1.0, dist);
    return {{"kind", "admissibility"}, {"ok", ok}, {"lambda_max", top}, {"distance", dist}};
}

json replay_gac(const Reader& rd, const json& c, const std::string& p, double tol) {
    rd.only_keys(c, p, {"kind", "interconnection", "multipliers", "gamma", "global"});
    const Interconnection m = rd.interconnection(rd.object(c, p, "interconnection"), child(p, "interconnection"));
    const std::string mp = child(p, "multipliers");
    const json& mv = rd.object(c, p, "multipliers");
    if (!mv.is_array()) rd.error(ErrorKind::ParseError, mp, "expected an array of multipliers");
    std::vector<Multiplier> xs;
    for (std::size_t i = 0; i < mv.size(); ++i) xs.push_back(read_multiplier(rd, mv[i], child(mp, i)));
    const Multiplier w = read_multiplier(rd, rd.object(c, p, "global"), child(p, "global"));
    const Mat g = gac_matrix(m, xs, w);
    const double top = lambda_max(g);
    const bool ok = top <= tol * std::max(1.0, max_abs(g));
    return {{"kind", "gac"}, {"ok", ok}, {"lambda_max", top}};
}

json cmd_validate(const Source& src, const Options& o, Exit& exit, std::string& status) {
    const Reader rd(src);
    const json& root = src.root();
    if (!root.is_object()) rd.error(ErrorKind::ParseError, "", "expected a report object");
    const json& certs = rd.object(root, "", "certificates");
    if (!certs.is_array()) rd.error(ErrorKind::ParseError, "/certificates", "expected an array");
    std::mt19937 rng(o.seed);
    json rows = json::array();
    bool all = true;
    for (std::size_t i = 0; i < certs.size(); ++i) {
        const std::string p = child("/certificates", i);
        const std::string kind = rd.text(rd.object(certs[i], p, "kind"), child(p, "kind"));
        json row;
        if (kind == "storage")
            row = replay_storage(rd, certs[i], p, rng);
        else if (kind == "admissibility")
            row = replay_admissibility(rd, certs[i], p, o.tol);
        else if (kind == "gac")
            row = replay_gac(rd, certs[i], p, o.tol);
        else
            rd.error(ErrorKind::ParseError, child(p, "kind"), "unknown certificate kind '" + kind + "'");
        all = all && row["ok"].get<bool>();
        rows.push_back(row);
    }
    if (certs.empty()) all = false;
    status = all ? "valid" : "invalid";
    if (!all) exit = Exit::Negative;
    return {{"certificates", certs.size()}, {"replayed", rows}};
}

Options validate_options(const Source& src, const Flags& flags) {
    Options base;
    // Reuse the tolerances recorded in the report unless overridden.
    const json& root = src.root();
    if (root.is_object() && root.contains("options") && root["options"].is_object()) {
        const json& o = root["options"];
        if (o.contains("tol") && o["tol"].is_number()) base.tol = o["tol"].get<double>();
        if (o.contains("seed") && o["seed"].is_number_unsigned()) base.seed = o["seed"].get<unsigned>();
    }
    return effective(base, flags);
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"analyze", "synthesize", "admissible", "localize",
                                                "group",   "admm",       "validate"};
    return names;
}

Outcome run(const std::string& command, const Source& input, const Flags& flags) {
    Outcome out;
    json certs = json::array();
    json traces = json::object();
    std::string status;
    json results;
    Options opts;
    if (command == "validate") {
        opts = validate_options(input, flags);
        results = cmd_validate(input, opts, out.exit, status);
        out.report = {{"command", command}, {"input", input.name()}, {"status", status},
                      {"options", options_json(opts)}, {"results", results}};
        return out;
    }

    const Problem pr = parse_problem(input);
    opts = effective(pr.options, flags);
    try {
        if (command == "analyze") {
            results = cmd_analyze(pr, opts, certs, out.exit);
        } else if (command == "synthesize") {
            results = cmd_synthesize(pr, opts, certs, out.exit);
        } else if (command == "admissible") {
            results = cmd_admissible(pr, opts, certs, out.exit, status);
        } else if (command == "localize") {
            results = cmd_localize(pr, opts, certs);
        } else if (command == "group") {
            results = cmd_group(pr, opts, certs, traces);
        } else if (command == "admm") {
            results = cmd_admm(pr, opts, certs, traces, out.exit, status);
        } else {
            fail(ErrorKind::InvalidArgument, "unknown command '" + command + "'");
        }
    } catch (const Error& e) {
        if (!negative_answer(e.kind())) throw;
        out.exit = Exit::Negative;
        status = "infeasible";
        results = {{"error", std::string(to_string(e.kind()))}, {"message", e.what()}};
        certs = json::array();
    }
    if (status.empty()) status = out.exit == Exit::Success ? "feasible" : "infeasible";
    out.report = {{"command", command},
                  {"input", input.name()},
                  {"status", status},
                  {"options", options_json(opts)},
                  {"problem", input.root()},
                  {"results", results},
                  {"certificates", certs}};
    if (!traces.empty()) out.report["traces"] = traces;
    return out;
}

}  // namespace iqcloc::cli
