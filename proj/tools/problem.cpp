#include "problem.hpp"

#include "iqcloc/error.hpp"

#include <algorithm>
#include <sstream>

namespace iqcloc::cli {

void Reader::error(ErrorKind kind, const std::string& pointer, const std::string& msg) const {
    fail(kind, src_.where(pointer) + ": " + msg);
}

void Reader::only_keys(const json& obj, const std::string& pointer, std::initializer_list<const char*> keys) const {
    if (!obj.is_object()) error(ErrorKind::ParseError, pointer, "expected an object");
    for (const auto& [k, v] : obj.items()) {
        const bool known = std::any_of(keys.begin(), keys.end(), [&](const char* s) { return k == s; });
        if (!known) error(ErrorKind::ParseError, child(pointer, k), "unknown key '" + k + "'");
    }
}

const json& Reader::object(const json& parent, const std::string& pointer, const char* key) const {
    if (!parent.contains(key)) error(ErrorKind::ParseError, pointer, std::string("missing key '") + key + "'");
    return parent.at(key);
}

const json* Reader::optional(const json& obj, const char* key) const {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

double Reader::number(const json& v, const std::string& pointer) const {
    if (!v.is_number()) error(ErrorKind::ParseError, pointer, "expected a number");
    return v.get<double>();
}

int Reader::count(const json& v, const std::string& pointer) const {
    if (!v.is_number_integer() || v.get<long long>() < 0 || v.get<long long>() > 1'000'000)
        error(ErrorKind::ParseError, pointer, "expected a nonnegative integer");
    return v.get<int>();
}

std::string Reader::text(const json& v, const std::string& pointer) const {
    if (!v.is_string()) error(ErrorKind::ParseError, pointer, "expected a string");
    return v.get<std::string>();
}

Mat Reader::matrix(const json& v, const std::string& pointer) const {
    if (!v.is_array()) error(ErrorKind::ParseError, pointer, "expected a matrix as an array of rows");
    const auto rows = static_cast<Eigen::Index>(v.size());
    Eigen::Index cols = -1;
    for (std::size_t r = 0; r < v.size(); ++r) {
        const std::string rp = child(pointer, r);
        if (!v[r].is_array()) error(ErrorKind::ParseError, rp, "expected a row array");
        const auto len = static_cast<Eigen::Index>(v[r].size());
        if (cols < 0) {
            cols = len;
        } else if (len != cols) {
            std::ostringstream os;
            os << "row " << r << " has " << len << " entries, expected " << cols;
            error(ErrorKind::ParseError, rp, os.str());
        }
    }
    Mat m(rows, std::max<Eigen::Index>(cols, 0));
    for (std::size_t r = 0; r < v.size(); ++r)
        for (std::size_t c = 0; c < v[r].size(); ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = number(v[r][c], child(child(pointer, r), c));
    return m;
}

Mat Reader::matrix(const json& v, const std::string& pointer, int rows, int cols, const std::string& name) const {
    Mat m = matrix(v, pointer);
    // An empty array stands for any matrix with no rows.
    if (m.rows() == 0 && rows == 0) return Mat::Zero(0, cols);
    if (m.rows() != rows || m.cols() != cols) {
        std::ostringstream os;
        os << "matrix " << name << " is " << m.rows() << "x" << m.cols() << ", expected " << rows << "x" << cols;
        error(ErrorKind::DimensionMismatch, pointer, os.str());
    }
    return m;
}

std::vector<int> Reader::counts(const json& v, const std::string& pointer) const {
    if (!v.is_array()) error(ErrorKind::ParseError, pointer, "expected an array of counts");
    std::vector<int> out;
    for (std::size_t k = 0; k < v.size(); ++k) out.push_back(count(v[k], child(pointer, k)));
    return out;
}

QuadMultiplier Reader::quad(const json& v, const std::string& pointer, int n_in, int n_out, const std::string& name,
                            double epsilon) const {
    const int n = n_in + n_out;
    if (v.is_string()) {
        const std::string preset = v.get<std::string>();
        if (preset == "l2gain") return l2gain_quad(n_in, n_out);
        if (preset == "passivity") {
            if (n_in != n_out) error(ErrorKind::DimensionMismatch, pointer, name + ": passivity needs equal port sizes");
            return {Mat::Zero(n, n), Mat::Zero(n, n), passivity_multiplier(n_in, epsilon).matrix(), n_in};
        }
        error(ErrorKind::ParseError, pointer, "unknown preset '" + preset + "' (expected l2gain or passivity)");
    }
    only_keys(v, pointer, {"X1", "X2", "X3"});
    QuadMultiplier q;
    q.n_in = n_in;
    q.X1 = matrix(object(v, pointer, "X1"), child(pointer, "X1"), n, n, name + ".X1");
    q.X2 = matrix(object(v, pointer, "X2"), child(pointer, "X2"), n, n, name + ".X2");
    q.X3 = matrix(object(v, pointer, "X3"), child(pointer, "X3"), n, n, name + ".X3");
    try {
        q.check();
    } catch (const Error& e) {
        error(e.kind(), pointer, name + ": " + e.what());
    }
    return q;
}

Interconnection Reader::interconnection(const json& v, const std::string& p) const {
    only_keys(v, p, {"n_w", "n_z", "nv", "ny", "M11", "M12", "M21", "M22"});
    Interconnection m;
    m.nv_parts = counts(object(v, p, "nv"), child(p, "nv"));
    m.ny_parts = counts(object(v, p, "ny"), child(p, "ny"));
    if (m.nv_parts.size() != m.ny_parts.size())
        error(ErrorKind::DimensionMismatch, child(p, "ny"), "nv and ny must list the same number of subsystems");
    const int nw = count(object(v, p, "n_w"), child(p, "n_w"));
    const int nz = count(object(v, p, "n_z"), child(p, "n_z"));
    int nv = 0, ny = 0;
    for (int d : m.nv_parts) nv += d;
    for (int d : m.ny_parts) ny += d;
    m.M11 = matrix(object(v, p, "M11"), child(p, "M11"), nv, ny, "M11");
    m.M12 = matrix(object(v, p, "M12"), child(p, "M12"), nv, nw, "M12");
    m.M21 = matrix(object(v, p, "M21"), child(p, "M21"), nz, ny, "M21");
    m.M22 = matrix(object(v, p, "M22"), child(p, "M22"), nz, nw, "M22");
    return m;
}

namespace {

Subsystem parse_subsystem(const Reader& rd, const json& v, const std::string& p, double epsilon) {
    rd.only_keys(v, p,
                 {"name", "n", "n_v", "n_y", "n_u", "n_m", "A", "B1", "B2", "C1", "D11", "D12", "C2", "D21",
                  "objective", "multiplier"});
    Subsystem s;
    s.name = rd.text(rd.object(v, p, "name"), child(p, "name"));
    const int n = rd.count(rd.object(v, p, "n"), child(p, "n"));
    const int nv = rd.count(rd.object(v, p, "n_v"), child(p, "n_v"));
    const int ny = rd.count(rd.object(v, p, "n_y"), child(p, "n_y"));
    const json* nu_j = rd.optional(v, "n_u");
    const json* nm_j = rd.optional(v, "n_m");
    const int nu = nu_j ? rd.count(*nu_j, child(p, "n_u")) : 0;
    const int nm = nm_j ? rd.count(*nm_j, child(p, "n_m")) : 0;
    const std::string tag = "'" + s.name + "' ";
    const auto get = [&](const char* key, int r, int c, bool required) -> Mat {
        const json* m = rd.optional(v, key);
        if (!m) {
            if (required && r * c > 0) rd.error(ErrorKind::ParseError, p, tag + "is missing matrix " + key);
            return Mat::Zero(r, c);
        }
        return rd.matrix(*m, child(p, key), r, c, tag + key);
    };
    StateSpace& g = s.plant;
    g.A = get("A", n, n, true);
    g.B1 = get("B1", n, nv, true);
    g.C1 = get("C1", ny, n, true);
    g.D11 = get("D11", ny, nv, false);
    g.B2 = get("B2", n, nu, true);
    g.D12 = get("D12", ny, nu, false);
    g.C2 = get("C2", nm, n, true);
    g.D21 = get("D21", nm, nv, false);
    if (const json* o = rd.optional(v, "objective"))
        s.objective = rd.quad(*o, child(p, "objective"), nv, ny, tag + "objective", epsilon);
    if (const json* o = rd.optional(v, "multiplier"))
        s.multiplier = rd.quad(*o, child(p, "multiplier"), nv, ny, tag + "multiplier", epsilon);
    return s;
}

Options parse_options(const Reader& rd, const json& v, const std::string& p) {
    rd.only_keys(v, p,
                 {"tol", "gamma_lo", "gamma_hi", "max_iter", "res_tol", "rho", "mode", "ng", "nbar", "seed", "grid",
                  "epsilon"});
    Options o;
    if (const json* x = rd.optional(v, "tol")) o.tol = rd.number(*x, child(p, "tol"));
    if (const json* x = rd.optional(v, "gamma_lo")) o.gamma_lo = rd.number(*x, child(p, "gamma_lo"));
    if (const json* x = rd.optional(v, "gamma_hi")) o.gamma_hi = rd.number(*x, child(p, "gamma_hi"));
    if (const json* x = rd.optional(v, "max_iter")) o.max_iter = rd.count(*x, child(p, "max_iter"));
    if (const json* x = rd.optional(v, "res_tol")) o.res_tol = rd.number(*x, child(p, "res_tol"));
    if (const json* x = rd.optional(v, "rho")) o.rho = rd.number(*x, child(p, "rho"));
    if (const json* x = rd.optional(v, "mode")) o.mode = rd.text(*x, child(p, "mode"));
    if (const json* x = rd.optional(v, "ng")) o.ng = rd.count(*x, child(p, "ng"));
    if (const json* x = rd.optional(v, "nbar")) o.nbar = rd.count(*x, child(p, "nbar"));
    if (const json* x = rd.optional(v, "seed")) o.seed = static_cast<unsigned>(rd.count(*x, child(p, "seed")));
    if (const json* x = rd.optional(v, "grid")) o.grid = rd.count(*x, child(p, "grid"));
    if (const json* x = rd.optional(v, "epsilon")) o.epsilon = rd.number(*x, child(p, "epsilon"));
    if (o.mode != "blockdiag" && o.mode != "fullblock")
        rd.error(ErrorKind::ParseError, child(p, "mode"), "mode must be blockdiag or fullblock");
    return o;
}

}  // namespace

Problem parse_problem(const Source& src) {
    const Reader rd(src);
    const json& root = src.root();
    rd.only_keys(root, "", {"subsystems", "interconnection", "global_objective", "options"});
    Problem pr;
    if (const json* o = rd.optional(root, "options")) pr.options = parse_options(rd, *o, "/options");

    const json& subs = rd.object(root, "", "subsystems");
    if (!subs.is_array() || subs.empty())
        rd.error(ErrorKind::ParseError, "/subsystems", "expected a nonempty array of subsystems");
    for (std::size_t i = 0; i < subs.size(); ++i)
        pr.subsystems.push_back(parse_subsystem(rd, subs[i], child("/subsystems", i), pr.options.epsilon));

    if (const json* ic = rd.optional(root, "interconnection")) {
        pr.interconnection = rd.interconnection(*ic, "/interconnection");
        const Interconnection& m = *pr.interconnection;
        if (m.count() != static_cast<int>(pr.subsystems.size()))
            rd.error(ErrorKind::DimensionMismatch, "/interconnection/nv",
                     "interconnection lists " + std::to_string(m.count()) + " subsystems, file has " +
                         std::to_string(pr.subsystems.size()));
        for (int i = 0; i < m.count(); ++i) {
            const StateSpace& g = pr.subsystems[i].plant;
            if (g.n_v() != m.nv_parts[i] || g.n_y() != m.ny_parts[i])
                rd.error(ErrorKind::DimensionMismatch, child("/interconnection/nv", i),
                         "ports of subsystem '" + pr.subsystems[i].name + "' do not match the partition");
        }
        if (const json* g = rd.optional(root, "global_objective"))
            pr.global_objective = rd.quad(*g, "/global_objective", m.n_w(), m.n_z(), "global_objective",
                                          pr.options.epsilon);
    } else if (rd.optional(root, "global_objective")) {
        rd.error(ErrorKind::ParseError, "/global_objective", "global_objective needs an interconnection");
    }
    return pr;
}

json to_json(const Mat& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

json to_json(const QuadMultiplier& q) { return {{"X1", to_json(q.X1)}, {"X2", to_json(q.X2)}, {"X3", to_json(q.X3)}}; }

json to_json(const Multiplier& x) { return {{"n_in", x.n_in()}, {"X", to_json(x.matrix())}}; }

json to_json(const ClosedLoop& sys) {
    return {{"n", sys.n()},
            {"n_v", sys.n_v()},
            {"n_y", sys.n_y()},
            {"A", to_json(sys.A)},
            {"B", to_json(sys.B)},
            {"C", to_json(sys.C)},
            {"D", to_json(sys.D)}};
}

json to_json(const Interconnection& m) {
    return {{"n_w", m.n_w()},          {"n_z", m.n_z()},          {"nv", m.nv_parts},        {"ny", m.ny_parts},
            {"M11", to_json(m.M11)},   {"M12", to_json(m.M12)},   {"M21", to_json(m.M21)},   {"M22", to_json(m.M22)}};
}

json to_json(const Controller& k) {
    return {{"Ac", to_json(k.Ac)}, {"Bc", to_json(k.Bc)}, {"Cc", to_json(k.Cc)}, {"Dc", to_json(k.Dc)}};
}

}  // namespace iqcloc::cli
