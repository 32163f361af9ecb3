#include "opplab/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "opplab/detail/rng.hpp"
#include "opplab/dynamics.hpp"
#include "opplab/energy.hpp"
#include "opplab/exceptional.hpp"
#include "opplab/lattice.hpp"
#include "opplab/mainterm.hpp"

#ifndef OPPLAB_VERSION
#define OPPLAB_VERSION "0.0.0"
#endif

namespace opplab {

using nlohmann::json;

std::vector<ExperimentRow> experiment_quantitative(const QForm& q, double a, double b,
                                                   const std::vector<double>& T_list, double rho, double A,
                                                   NormKind norm, double tol) {
    if (!(a <= b)) throw Error(ErrorKind::DomainError, "need a <= b");
    for (std::size_t i = 1; i < T_list.size(); ++i) {
        if (!(T_list[i] > T_list[i - 1])) throw Error(ErrorKind::InvalidArgument, "T list must be ascending");
    }
    const double cq = cq_quadrature(q, tol, norm).value;

    std::vector<ExperimentRow> rows;
    for (double T : T_list) {
        ExperimentRow r;
        r.T = T;
        r.total = count_in_shell(q, a, b, T, false, norm).total;
        r.main = cq * (b - a) * T;
        const ExceptionalSet exc = find_exceptional(q, ExceptionalParams{rho, A, std::log(T)}, norm);
        r.special = special_count(q, exc, a, b, T);
        r.residual = static_cast<double>(r.total) - r.main - static_cast<double>(r.special);
        r.residual_over_T = r.residual / T;
        rows.push_back(r);
    }
    return rows;
}

namespace {

Mat3 read_matrix(const json& m, const char* what) {
    if (!m.is_array() || m.size() != 3) throw Error(ErrorKind::InvalidArgument, std::string(what) + " must be 3x3");
    Mat3 out;
    for (int i = 0; i < 3; ++i) {
        if (!m[i].is_array() || m[i].size() != 3)
            throw Error(ErrorKind::InvalidArgument, std::string(what) + " must be 3x3");
        for (int j = 0; j < 3; ++j) {
            if (!m[i][j].is_number()) throw Error(ErrorKind::InvalidArgument, std::string(what) + " entries must be numbers");
            out(i, j) = m[i][j].get<double>();
        }
    }
    return out;
}

Rational read_rational(const json& x) {
    if (x.is_number_integer()) return Rational(x.get<std::int64_t>());
    if (x.is_string()) {
        try {
            return Rational(x.get<std::string>());
        } catch (const std::exception&) {
        }
    }
    throw Error(ErrorKind::InvalidArgument, "exact entries must be integers or \"p/q\" strings");
}

}  // namespace

QForm parse_form_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, std::string("form file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw Error(ErrorKind::InvalidArgument, "form file must hold a JSON object");

    std::optional<QForm> real;
    if (j.contains("coeffs")) {
        const json& c = j["coeffs"];
        if (!c.is_array() || c.size() != 6) throw Error(ErrorKind::InvalidArgument, "coeffs needs 6 numbers");
        std::array<double, 6> x{};
        for (int i = 0; i < 6; ++i) {
            if (!c[i].is_number()) throw Error(ErrorKind::InvalidArgument, "coeffs entries must be numbers");
            x[i] = c[i].get<double>();
        }
        real = QForm::from_coefficients(x[0], x[1], x[2], x[3], x[4], x[5]);
    } else if (j.contains("matrix")) {
        real = QForm::from_matrix(read_matrix(j["matrix"], "matrix"));
    }

    if (!j.contains("exact")) {
        if (!real) throw Error(ErrorKind::InvalidArgument, "form file needs coeffs, matrix or exact");
        return *real;
    }

    const json& e = j["exact"];
    if (!e.is_object() || !e.contains("num")) throw Error(ErrorKind::InvalidArgument, "exact needs num");
    const json& num = e["num"];
    if (!num.is_array() || num.size() != 3) throw Error(ErrorKind::InvalidArgument, "exact.num must be 3x3");
    const Rational den = e.contains("den") ? read_rational(e["den"]) : Rational(1);
    if (den == 0) throw Error(ErrorKind::InvalidArgument, "exact.den must be nonzero");
    RMat3 m;
    for (int i = 0; i < 3; ++i) {
        if (!num[i].is_array() || num[i].size() != 3) throw Error(ErrorKind::InvalidArgument, "exact.num must be 3x3");
        for (int k = 0; k < 3; ++k) m[i][k] = read_rational(num[i][k]) / den;
    }
    const QForm q = QForm::from_rational(m);
    if (real) {
        const double scale = std::max(1.0, q.norm());
        if (max_abs(real->matrix() - q.matrix()) > 1e-12 * scale)
            throw Error(ErrorKind::InvalidArgument, "exact coefficients disagree with the floating-point ones");
    }
    return q;
}

QForm load_form(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open form file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_form_json(ss.str());
}

namespace {

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

json to_json(const IVec3& v) { return json::array({v[0], v[1], v[2]}); }

std::vector<double> parse_reals(const std::string& s, std::size_t expected, const char* what) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double x = 0;
        try {
            x = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || item.find_first_not_of(" \t", used) != std::string::npos)
            throw Error(ErrorKind::InvalidArgument, std::string("cannot parse ") + what + ": " + s);
        out.push_back(x);
    }
    if (expected && out.size() != expected)
        throw Error(ErrorKind::InvalidArgument, std::string(what) + " needs " + std::to_string(expected) + " numbers");
    return out;
}

IVec3 parse_ivec(const std::string& s) {
    const auto x = parse_reals(s, 3, "integer vector");
    IVec3 v;
    for (int i = 0; i < 3; ++i) {
        if (x[i] != std::floor(x[i]) || std::abs(x[i]) > 1e15)
            throw Error(ErrorKind::InvalidArgument, "vector entries must be integers: " + s);
        v[i] = static_cast<std::int64_t>(x[i]);
    }
    return v;
}

void require_power_of_two(std::int64_t nodes, std::int64_t min) {
    if (nodes < min || (nodes & (nodes - 1)) != 0)
        throw Error(ErrorKind::InvalidArgument, "--nodes must be a power of two >= " + std::to_string(min));
}

/// Everything a subcommand produces: the payload and what goes into the manifest.
struct Output {
    std::string text;
    json params = json::object();
    std::vector<std::uint64_t> seeds;
    std::string form_hash;
};

const char* kFooter = R"(Exit codes: 0 success, 2 input error, 3 budget exceeded, 1 internal error.
Every command acts on the det-1, signature (1,2) normalization of the form file.
With --out FILE the result is written to FILE and a run record is appended to
FILE.manifest.json (a JSON array). Outputs contain no timings unless --timing is set.

CSV schemas (12 significant digits):
  count --csv       T,a,b,total,primitive[,elapsed_s]
  solve --csv       T,s,x,y,z,residual
  flow average      t,value,gap,nodes
  flow moment       t,value,gap
  flow jcheck       t,value,gap,rhs,relerr
  flow decay        t,value,gap,bound_ratio
  experiment        T,total,main,R_T,residual,residual_over_T
Here gap is the change of the value when the node count is halved.)";

struct Common {
    std::string out_path;
    std::string norm = "euclidean";
    bool timing = false;
};

NormKind norm_of(const Common& c) { return parse_norm_kind(c.norm); }

QForm normalized_form(const std::string& path, Output& o) {
    const QForm raw = load_form(path);
    o.form_hash = form_hash(raw);
    const NormalizedForm n = normalize_det(raw);
    o.params["form_scale"] = n.scale;
    return n.form;
}

// ---------------------------------------------------------------- count

struct CountOpts {
    std::string form;
    double a = 0, b = 0;
    std::vector<double> T;
    bool primitive = false, brute = false, csv = false;
};

Output cmd_count(const CountOpts& o, const Common& c) {
    Output out;
    const QForm q = normalized_form(o.form, out);
    const NormKind norm = norm_of(c);
    std::ostringstream s;
    json rows = json::array();
    if (o.csv) s << "T,a,b,total,primitive" << (c.timing ? ",elapsed_s" : "") << "\n";
    for (double T : o.T) {
        const CountResult r = o.brute ? count_bruteforce(q, o.a, o.b, T, o.primitive, norm)
                                      : count_in_shell(q, o.a, o.b, T, o.primitive, norm);
        if (o.csv) {
            s << fmt(r.T) << ',' << fmt(r.a) << ',' << fmt(r.b) << ',' << r.total << ',' << (r.primitive_only ? 1 : 0);
            if (c.timing) s << ',' << fmt(r.elapsed);
            s << "\n";
        } else {
            json row = {{"T", r.T},
                        {"a", r.a},
                        {"b", r.b},
                        {"total", r.total},
                        {"primitive_only", r.primitive_only},
                        {"norm", to_string(r.norm_kind)},
                        {"method", o.brute ? "brute" : "fiber"},
                        {"fallback_used", r.fallback_used},
                        {"sheared", r.sheared}};
            if (c.timing) row["elapsed_s"] = r.elapsed;
            rows.push_back(row);
        }
    }
    if (!o.csv) s << (rows.size() == 1 ? rows[0] : rows).dump(2) << "\n";
    out.text = s.str();
    return out;
}

// ---------------------------------------------------------------- cq

struct CqOpts {
    std::string form;
    std::string method = "quadrature";
    double tol = 1e-8;
    std::int64_t samples = 1000000;
    double T_ref = 50, width = 0.2;
    std::uint64_t seed = 1;
};

Output cmd_cq(const CqOpts& o, const Common& c) {
    Output out;
    const QForm q = normalized_form(o.form, out);
    CqEstimate e;
    if (o.method == "quadrature") {
        e = cq_quadrature(q, o.tol, norm_of(c));
    } else {
        e = cq_montecarlo(q, o.samples, o.T_ref, o.width, o.seed, norm_of(c));
        out.seeds.push_back(o.seed);
    }
    const json j = {{"value", e.value}, {"stderr", e.stderr_}, {"method", e.method}, {"nodes", e.samples_or_nodes}};
    out.text = j.dump(2) + "\n";
    return out;
}

// ---------------------------------------------------------------- solve

struct SolveOpts {
    std::string form;
    double s = 0;
    std::vector<double> T;
    bool csv = false;
};

Output cmd_solve(const SolveOpts& o, const Common& c) {
    Output out;
    const QForm q = normalized_form(o.form, out);
    std::ostringstream s;
    json rows = json::array();
    if (o.csv) s << "T,s,x,y,z,residual\n";
    for (double T : o.T) {
        const MinValueResult r = min_value_solve(q, o.s, T, norm_of(c));
        if (o.csv) {
            s << fmt(T) << ',' << fmt(o.s) << ',' << r.vector[0] << ',' << r.vector[1] << ',' << r.vector[2] << ','
              << fmt(r.residual) << "\n";
        } else {
            rows.push_back({{"T", T}, {"s", o.s}, {"vector", to_json(r.vector)}, {"residual", r.residual}});
        }
    }
    if (!o.csv) s << (rows.size() == 1 ? rows[0] : rows).dump(2) << "\n";
    out.text = s.str();
    return out;
}

// ---------------------------------------------------------------- exceptional

struct ExceptionalOpts {
    std::string form;
    double rho = 0.05, A = 20;
    std::optional<double> t, T, a, b;
};

Output cmd_exceptional(const ExceptionalOpts& o, const Common& c) {
    Output out;
    const QForm q = normalized_form(o.form, out);
    if (o.t.has_value() == o.T.has_value()) throw Error(ErrorKind::InvalidArgument, "give exactly one of --t and --T");
    if (o.a.has_value() != o.b.has_value()) throw Error(ErrorKind::InvalidArgument, "--a and --b go together");
    if (o.T && !(*o.T > 0)) throw Error(ErrorKind::DomainError, "--T must be positive");
    const double t = o.t ? *o.t : std::log(*o.T);
    const ExceptionalParams p{o.rho, o.A, t};
    const ExceptionalSet exc = find_exceptional(q, p, norm_of(c));

    json lines = json::array(), planes = json::array();
    for (const auto& l : exc.lines) lines.push_back({{"v", to_json(l.v)}, {"norm", l.norm}, {"value", l.value}});
    for (const auto& pl : exc.planes) {
        planes.push_back({{"u", to_json(pl.u)},
                          {"w1", to_json(pl.w1)},
                          {"w2", to_json(pl.w2)},
                          {"norm_w1", pl.norm_w1},
                          {"norm_w2", pl.norm_w2},
                          {"dual_value", pl.dual_value}});
    }
    json j = {{"params",
               {{"rho", p.rho}, {"A", p.A}, {"t", p.t}, {"height", p.height()}, {"smallness", p.smallness()}}},
              {"norm", to_string(exc.norm)},
              {"lines", lines},
              {"planes", planes},
              {"exceeds_four", exc.exceeds_four()}};
    if (o.a) {
        const double T = std::exp(t);
        j["special_count"] = {{"a", *o.a}, {"b", *o.b}, {"T", T}, {"count", special_count(q, exc, *o.a, *o.b, T)}};
    }
    out.text = j.dump(2) + "\n";
    return out;
}

// ---------------------------------------------------------------- approx

struct ApproxOpts {
    std::string form;
    std::string vectors;
    std::optional<int> N;
};

Output cmd_approx(const ApproxOpts& o, const Common&) {
    Output out;
    const QForm q = normalized_form(o.form, out);
    if (o.vectors.empty() == !o.N.has_value())
        throw Error(ErrorKind::InvalidArgument, "give exactly one of --vectors and --N");
    RationalApproximant r;
    if (o.N) {
        r = diophantine_quality(q, *o.N);
    } else {
        std::array<IVec3, 5> v;
        std::stringstream ss(o.vectors);
        std::string item;
        std::size_t n = 0;
        while (std::getline(ss, item, ';')) {
            if (n == 5) throw Error(ErrorKind::InvalidArgument, "--vectors takes exactly five vectors");
            v[n++] = parse_ivec(item);
        }
        if (n != 5) throw Error(ErrorKind::InvalidArgument, "--vectors takes exactly five vectors");
        r = rational_from_five(q, v);
    }
    json P = json::array();
    for (int i = 0; i < 3; ++i) P.push_back(json::array({r.P(i, 0), r.P(i, 1), r.P(i, 2)}));
    const json j = {{"P", P}, {"lambda", r.lambda}, {"distance", r.distance}, {"exact", r.exact}};
    out.text = j.dump(2) + "\n";
    return out;
}

// ---------------------------------------------------------------- flow

struct FlowOpts {
    std::string form;
    std::string op = "average";
    std::vector<double> t;
    std::int64_t nodes = 1024;
    std::string f = "ball:1.5";
    std::string xi = "1,0,0";
    double p = 0.5;
    int index = 1;
    double c = 0.3, theta0 = 0.4;
    std::string v = "0.3,-1.2,0.8";
    double delta = 0.1, sigma = 0.3;
    bool plain = false;
};

/// v with ||v|| = 0.7 e^t and Q0(v) = c, close to the null direction k(theta0) e3.
Vec3 near_null_vector(double t, double c, double theta0) {
    const Vec3 n = k(theta0).matrix() * Vec3(0, 0, 1);
    const Vec3 p(n[2], -n[1], n[0]);
    const double s = 0.7 * std::exp(t);
    if (std::abs(c) > s * s) throw Error(ErrorKind::DomainError, "|c| too large for this t");
    const double phi = 0.5 * std::asin(c / (s * s));
    return s * (n * std::cos(phi) + p * std::sin(phi));
}

Output cmd_flow(const FlowOpts& o, const Common&) {
    Output out;
    GroupElement g;
    if (!o.form.empty()) g = factor_gq(normalized_form(o.form, out));
    require_power_of_two(o.nodes, 512);
    const auto xc = parse_reals(o.xi, 3, "--xi");
    const AngularWeight xi_angle = [xc](double th) { return xc[0] + xc[1] * std::cos(th) + xc[2] * std::sin(th); };
    const SphereWeight xi_sphere = [xc](const Vec3& w) { return xc[0] + xc[1] * w[0] + xc[2] * w[1]; };
    const std::int64_t half = o.nodes / 2;

    std::ostringstream s;
    if (o.op == "average") {
        const TestFunction f = TestFunction::parse(o.f);
        s << "t,value,gap,nodes\n";
        for (double t : o.t) {
            const auto r = circle_average(f, xi_angle, t, g, o.nodes);
            s << fmt(t) << ',' << fmt(r.value) << ',' << fmt(r.richardson_gap) << ',' << r.nodes << "\n";
        }
    } else if (o.op == "moment") {
        s << "t,value,gap\n";
        for (double t : o.t) {
            const double m = alpha_moment(g, t, o.p, o.index, o.nodes);
            const double m2 = alpha_moment(g, t, o.p, o.index, half);
            s << fmt(t) << ',' << fmt(m) << ',' << fmt(std::abs(m - m2)) << "\n";
        }
    } else if (o.op == "jcheck") {
        const TestFunction f = TestFunction::parse(o.f);
        s << "t,value,gap,rhs,relerr\n";
        for (double t : o.t) {
            const Vec3 v = near_null_vector(t, o.c, o.theta0);
            const EmmCheck r = emm_calculus_check(f, xi_sphere, v, t, o.nodes);
            const EmmCheck r2 = emm_calculus_check(f, xi_sphere, v, t, half);
            s << fmt(t) << ',' << fmt(r.lhs) << ',' << fmt(std::abs(r.lhs - r2.lhs)) << ',' << fmt(r.rhs) << ','
              << fmt(r.relerr) << "\n";
        }
    } else if (o.op == "decay") {
        const auto vc = parse_reals(o.v, 3, "--v");
        const Vec3 v(vc[0], vc[1], vc[2]);
        s << "t,value,gap,bound_ratio\n";
        for (double t : o.t) {
            const DecayResult r = kintegral_decay(v, t, o.delta, o.sigma, o.nodes, !o.plain);
            const DecayResult r2 = kintegral_decay(v, t, o.delta, o.sigma, half, !o.plain);
            s << fmt(t) << ',' << fmt(r.integral) << ',' << fmt(std::abs(r.integral - r2.integral)) << ','
              << fmt(r.bound_ratio) << "\n";
        }
    }
    out.text = s.str();
    return out;
}

// ---------------------------------------------------------------- energy

struct EnergyOpts {
    std::string op = "varpi";
    double alpha = 2.5;
    std::int64_t n = 2000;
    std::uint64_t seed = 7;
    double ell = 1.5;
    std::int64_t trials = 20;
    std::optional<double> delta, kappa;
    std::int64_t index = 0;
    std::vector<double> d{2, 4, 6};
    std::int64_t nodes = 512;
    double factor = 3;
};

Output cmd_energy(const EnergyOpts& o, const Common&) {
    Output out;
    json j;
    if (o.op == "varpi") {
        j = {{"alpha", o.alpha}, {"varpi", varpi(o.alpha)}};
        if (o.kappa) j["positivity_margin"] = varpi_positivity_margin(*o.kappa);
    } else if (o.op == "energy") {
        out.seeds.push_back(o.seed);
        if (o.n < 1 || o.n > 5000) throw Error(ErrorKind::BudgetExceeded, "--n must be in [1, 5000]");
        PointCloud cloud{regular_cloud(o.n, o.alpha, o.seed), o.alpha, 0};
        cloud.delta = o.delta ? *o.delta : std::pow(static_cast<double>(o.n), -1.0 / o.alpha);
        if (o.index < 0 || o.index >= static_cast<std::int64_t>(cloud.points.size()))
            throw Error(ErrorKind::InvalidArgument, "--index out of range");
        j = {{"n", o.n},           {"alpha", o.alpha}, {"seed", o.seed},
             {"delta", cloud.delta}, {"index", o.index}, {"energy", energy_at(cloud, static_cast<std::size_t>(o.index))}};
    } else if (o.op == "expansion") {
        out.seeds.push_back(o.seed);
        if (o.d.empty()) throw Error(ErrorKind::InvalidArgument, "--d needs at least one value");
        if (o.trials < 1 || o.trials > 10000) throw Error(ErrorKind::BudgetExceeded, "--trials must be in [1, 10000]");
        std::int64_t pass = 0;
        double worst = 0;
        json ratios = json::array();
        for (std::int64_t i = 0; i < o.trials; ++i) {
            auto rng = detail::stream_rng(o.seed, static_cast<std::uint64_t>(i));
            RVector w;
            for (int c = 0; c < 5; ++c) w[c] = 2 * detail::unit(rng) - 1;
            w /= r_norm(w);
            double lo = 1e300, hi = 0;
            for (double d : o.d) {
                const double x = expansion_check(w, d, o.alpha, o.nodes).normalized;
                lo = std::min(lo, x);
                hi = std::max(hi, x);
            }
            const double ratio = hi / lo;
            ratios.push_back(ratio);
            worst = std::max(worst, ratio);
            if (ratio <= o.factor) ++pass;
        }
        j = {{"alpha", o.alpha}, {"seed", o.seed}, {"trials", o.trials}, {"d", o.d},
             {"factor", o.factor}, {"pass", pass}, {"max_ratio", worst}, {"ratios", ratios}};
    } else if (o.op == "projection") {
        out.seeds.push_back(o.seed);
        const ProjectionStats st = projection_decay_experiment(o.n, o.alpha, o.ell, o.trials, o.seed);
        j = {{"n", st.n},
             {"alpha", st.alpha},
             {"ell", st.ell},
             {"trials", st.trials},
             {"seed", st.seed},
             {"delta", st.delta},
             {"delta_prime", st.delta_prime},
             {"varpi", st.varpi},
             {"threshold", st.threshold},
             {"upsilon", st.upsilon},
             {"pairs", st.pairs},
             {"fraction", st.fraction},
             {"median_decay", st.median_decay},
             {"isolated_fraction", st.isolated_fraction},
             {"active_fraction", st.active_fraction},
             {"degenerate", st.degenerate}};
    }
    out.text = j.dump(2) + "\n";
    return out;
}

// ---------------------------------------------------------------- experiment

struct ExperimentOpts {
    std::string form;
    double a = -0.5, b = 0.5;
    std::vector<double> T;
    double rho = 0.05, A = 20, tol = 1e-8;
};

Output cmd_experiment(const ExperimentOpts& o, const Common& c) {
    Output out;
    const QForm q = normalized_form(o.form, out);
    std::ostringstream s;
    s << "T,total,main,R_T,residual,residual_over_T\n";
    for (const auto& r : experiment_quantitative(q, o.a, o.b, o.T, o.rho, o.A, norm_of(c), o.tol)) {
        s << fmt(r.T) << ',' << r.total << ',' << fmt(r.main) << ',' << r.special << ',' << fmt(r.residual) << ','
          << fmt(r.residual_over_T) << "\n";
    }
    out.text = s.str();
    return out;
}

// ---------------------------------------------------------------- plumbing

std::string join_args(const std::vector<std::string>& args) {
    std::string s = "opplab";
    for (const auto& a : args) s += " " + a;
    return s;
}

json collect_params(const CLI::App* sub) {
    json p = json::object();
    for (const CLI::Option* opt : sub->get_options()) {
        const std::string name = opt->get_single_name();
        if (name.empty() || name == "help") continue;
        if (opt->count() > 0) {
            const auto& res = opt->results();
            if (opt->get_type_size() == 0) {
                p[name] = true;
            } else if (res.size() == 1) {
                p[name] = res[0];
            } else {
                p[name] = res;
            }
        } else if (!opt->get_default_str().empty()) {
            p[name] = opt->get_default_str();
        }
    }
    return p;
}

void append_manifest(const std::string& out_path, const json& record) {
    const std::string path = out_path + ".manifest.json";
    json all = json::array();
    if (std::filesystem::exists(path)) {
        std::ifstream in(path);
        try {
            all = json::parse(in);
        } catch (const json::exception&) {
            throw Error(ErrorKind::InvalidArgument, "existing manifest " + path + " is not valid JSON");
        }
        if (!all.is_array()) throw Error(ErrorKind::InvalidArgument, "existing manifest " + path + " is not an array");
    }
    all.push_back(record);
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw Error(ErrorKind::InvalidArgument, "cannot write " + path);
    f << all.dump(2) << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    const auto start = std::chrono::steady_clock::now();

    CLI::App app{"opplab: values of indefinite ternary quadratic forms at integer points", "opplab"};
    app.footer(kFooter);
    app.require_subcommand(1, 1);
    app.fallthrough();
    app.option_defaults()->always_capture_default();

    Common common;
    app.add_option("--out", common.out_path, "Write the result here and append FILE.manifest.json");
    app.add_option("--norm", common.norm, "Ball norm: euclidean or max")->check(CLI::IsMember({"euclidean", "max"}));
    app.add_flag("--timing", common.timing, "Include elapsed seconds in count output");

    CountOpts count;
    auto* sc = app.add_subcommand("count", "Count integer points with a <= Q(v) <= b and ||v|| <= T");
    sc->add_option("--form", count.form, "Form file (JSON)")->required();
    sc->add_option("--a", count.a, "Lower value bound")->required();
    sc->add_option("--b", count.b, "Upper value bound")->required();
    sc->add_option("--T", count.T, "Radius or list of radii")->required()->expected(1, -1);
    sc->add_flag("--primitive", count.primitive, "Primitive vectors only");
    sc->add_flag("--brute", count.brute, "Triple-loop reference (T <= 200)");
    sc->add_flag("--csv", count.csv, "CSV instead of JSON");

    CqOpts cq;
    auto* sq = app.add_subcommand("cq", "Main-term constant C_Q; JSON {value, stderr, method, nodes}");
    sq->add_option("--form", cq.form, "Form file (JSON)")->required();
    sq->add_option("--method", cq.method, "quadrature or montecarlo")
        ->check(CLI::IsMember({"quadrature", "montecarlo"}));
    sq->add_option("--tol", cq.tol, "Quadrature tolerance");
    sq->add_option("--samples", cq.samples, "Monte Carlo samples");
    sq->add_option("--T-ref", cq.T_ref, "Monte Carlo reference radius");
    sq->add_option("--width", cq.width, "Monte Carlo value window width");
    sq->add_option("--seed", cq.seed, "Monte Carlo seed");

    SolveOpts solve;
    auto* ss = app.add_subcommand("solve", "Primitive v with ||v|| <= T minimizing |Q(v) - s|");
    ss->add_option("--form", solve.form, "Form file (JSON)")->required();
    ss->add_option("--s", solve.s, "Target value")->required();
    ss->add_option("--T", solve.T, "Radius or list of radii")->required()->expected(1, -1);
    ss->add_flag("--csv", solve.csv, "CSV instead of JSON");

    ExceptionalOpts ex;
    auto* se = app.add_subcommand("exceptional", "Exceptional lines and planes at t = log T");
    se->add_option("--form", ex.form, "Form file (JSON)")->required();
    se->add_option("--rho", ex.rho, "Height exponent");
    se->add_option("--A", ex.A, "Smallness exponent");
    se->add_option("--t", ex.t, "Flow time");
    se->add_option("--T", ex.T, "Radius; t = log T");
    se->add_option("--a", ex.a, "With --b: also report special_count on [a, b] at T = e^t");
    se->add_option("--b", ex.b, "Upper value bound for special_count");

    ApproxOpts ap;
    auto* sa = app.add_subcommand("approx", "Rational approximant lambda P of the form");
    sa->add_option("--form", ap.form, "Form file (JSON)")->required();
    sa->add_option("--vectors", ap.vectors, "Five integer vectors \"x,y,z;x,y,z;...\" with small values");
    sa->add_option("--N", ap.N, "Exhaustive search height (<= 12)");

    FlowOpts flow;
    auto* sf = app.add_subcommand("flow", "Circle averages and related quantities along a(t)");
    sf->add_option("--op", flow.op, "average, moment, jcheck or decay")
        ->check(CLI::IsMember({"average", "moment", "jcheck", "decay"}));
    sf->add_option("--form", flow.form, "Form file; the lattice is g_Q Z^3 (default Z^3)");
    sf->add_option("--t", flow.t, "Flow time or list of times")->required()->expected(1, -1);
    sf->add_option("--nodes", flow.nodes, "Trapezoid nodes (power of two >= 512)");
    sf->add_option("--f", flow.f, "Test function: ball:R or bump:lo,hi,taper;lo,hi,taper;lo,hi,taper");
    sf->add_option("--xi", flow.xi, "Weight c0,c1,c2: c0 + c1 cos + c2 sin (average) or c0 + c1 w1 + c2 w2 (jcheck)");
    sf->add_option("--p", flow.p, "Moment exponent");
    sf->add_option("--index", flow.index, "Cusp function index (1 or 2)");
    sf->add_option("--c", flow.c, "jcheck: Q0 value of the near-null vector");
    sf->add_option("--theta0", flow.theta0, "jcheck: angle of the null direction");
    sf->add_option("--v", flow.v, "decay: vector x,y,z");
    sf->add_option("--delta", flow.delta, "decay: exponent delta");
    sf->add_option("--sigma", flow.sigma, "decay: exponent sigma");
    sf->add_flag("--plain", flow.plain, "decay: compare with e^{delta t} ||v||^{-1-delta}");

    EnergyOpts en;
    auto* sn = app.add_subcommand("energy", "Energies on the 5-dimensional representation; JSON output");
    sn->add_option("--op", en.op, "energy, varpi, expansion or projection")
        ->check(CLI::IsMember({"energy", "varpi", "expansion", "projection"}));
    sn->add_option("--alpha", en.alpha, "Energy exponent");
    sn->add_option("--n", en.n, "Point count");
    sn->add_option("--seed", en.seed, "Seed");
    sn->add_option("--ell", en.ell, "projection: flow length");
    sn->add_option("--trials", en.trials, "projection: random r values; expansion: random w");
    sn->add_option("--delta", en.delta, "energy: scale (default n^{-1/alpha})");
    sn->add_option("--kappa", en.kappa, "varpi: also report the positivity margin");
    sn->add_option("--index", en.index, "energy: point index");
    sn->add_option("--d", en.d, "expansion: list of d values")->expected(1, -1);
    sn->add_option("--nodes", en.nodes, "expansion: quadrature nodes");
    sn->add_option("--factor", en.factor, "expansion: allowed max/min ratio");

    ExperimentOpts xp;
    auto* sx = app.add_subcommand("experiment", "Count versus C_Q (b - a) T + R_T over a list of T");
    sx->add_option("--form", xp.form, "Form file (JSON)")->required();
    sx->add_option("--a", xp.a, "Lower value bound");
    sx->add_option("--b", xp.b, "Upper value bound");
    sx->add_option("--T", xp.T, "Ascending radii (may be empty)")->expected(0, -1);
    sx->add_option("--rho", xp.rho, "Height exponent");
    sx->add_option("--A", xp.A, "Smallness exponent");
    sx->add_option("--tol", xp.tol, "Quadrature tolerance for C_Q");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        std::string unknown;
        if (app.get_subcommands().empty()) {
            for (std::size_t i = 0; i < args.size() && unknown.empty(); ++i) {
                const bool takes_value = i > 0 && (args[i - 1] == "--out" || args[i - 1] == "--norm");
                if (!args[i].empty() && args[i][0] != '-' && !takes_value) unknown = args[i];
            }
        }
        if (!unknown.empty()) err << "error: unknown subcommand '" << unknown << "'\n\n" << app.help();
        else err << "error: " << e.what() << "\n\n" << app.help();
        return kExitInput;
    }

    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    try {
        Output o;
        if (name == "count") o = cmd_count(count, common);
        else if (name == "cq") o = cmd_cq(cq, common);
        else if (name == "solve") o = cmd_solve(solve, common);
        else if (name == "exceptional") o = cmd_exceptional(ex, common);
        else if (name == "approx") o = cmd_approx(ap, common);
        else if (name == "flow") o = cmd_flow(flow, common);
        else if (name == "energy") o = cmd_energy(en, common);
        else o = cmd_experiment(xp, common);

        if (common.out_path.empty()) {
            out << o.text;
            return kExitOk;
        }
        {
            std::ofstream f(common.out_path, std::ios::trunc | std::ios::binary);
            if (!f) throw Error(ErrorKind::InvalidArgument, "cannot write " + common.out_path);
            f << o.text;
        }
        json params = collect_params(sub);
        params.update(o.params);
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const json record = {{"command", join_args(args)},
                             {"subcommand", name},
                             {"form_hash", o.form_hash.empty() ? json(nullptr) : json(o.form_hash)},
                             {"seeds", o.seeds},
                             {"norm", common.norm},
                             {"params", params},
                             {"version", OPPLAB_VERSION},
                             {"wall_time_s", wall},
                             {"outputs", json::array({common.out_path})}};
        append_manifest(common.out_path, record);
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.is_budget() ? kExitBudget : kExitInput;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}

}  // namespace opplab
