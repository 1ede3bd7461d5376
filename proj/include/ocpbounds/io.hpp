#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ocpbounds/algorithms.hpp"
#include "ocpbounds/problems.hpp"

namespace ocpb {

// Run configuration, read from a single JSON file. Every section is optional
// (defaults reproduce the published experiment); unknown keys are rejected.
struct RunConfig {
    ManufacturedCase problem_case;
    int n = 50;
    int p_state = 1;
    int p_flux = 1;
    PgParams pg;
    std::optional<double> c_omega;
    std::string out_dir = ".";

    ProblemData problem() const {
        ProblemData p = problem_case.problem();
        if (c_omega) p.friedrichs = *c_omega;
        p.validate();
        return p;
    }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                           const char* section) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known)
            throw std::invalid_argument(std::string("config: unknown key '") + it.key() + "' in " +
                                        section);
    }
}

template <class T>
void read_into(const nlohmann::json& obj, const char* key, T& out) {
    if (obj.contains(key)) {
        try {
            out = obj.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw std::invalid_argument(std::string("config: bad value for '") + key + "'");
        }
    }
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
    detail::reject_unknown(j, {"problem", "discretization", "alg1", "pg", "c_omega", "output"},
                           "the top level");
    RunConfig cfg;
    ManufacturedCase& c = cfg.problem_case;
    if (j.contains("problem")) {
        const auto& pj = j.at("problem");
        detail::reject_unknown(pj,
                               {"k1", "k2", "m1", "m2", "beta", "alpha", "psi_minus", "psi_plus",
                                "constraint", "ball_radius"},
                               "problem");
        detail::read_into(pj, "k1", c.k1);
        detail::read_into(pj, "k2", c.k2);
        detail::read_into(pj, "m1", c.m1);
        detail::read_into(pj, "m2", c.m2);
        detail::read_into(pj, "beta", c.amplitude);
        detail::read_into(pj, "alpha", c.alpha);
        detail::read_into(pj, "psi_minus", c.psi_minus);
        detail::read_into(pj, "psi_plus", c.psi_plus);
        detail::read_into(pj, "ball_radius", c.ball_radius);
        std::string constraint = "box";
        detail::read_into(pj, "constraint", constraint);
        if (constraint == "box")
            c.constraint = AdmissibleSet::Kind::box;
        else if (constraint == "unconstrained")
            c.constraint = AdmissibleSet::Kind::unconstrained;
        else if (constraint == "ball")
            c.constraint = AdmissibleSet::Kind::l2_ball;
        else
            throw std::invalid_argument("config: constraint must be box, unconstrained or ball");
    }
    // re-run validation through the named constructor
    cfg.problem_case = build_case(c.k1, c.k2, c.m1, c.m2, c.amplitude, c.alpha, c.psi_minus,
                                  c.psi_plus, c.constraint, c.ball_radius);
    if (j.contains("discretization")) {
        const auto& dj = j.at("discretization");
        detail::reject_unknown(dj, {"n", "p_state", "p_flux", "p_control"}, "discretization");
        detail::read_into(dj, "n", cfg.n);
        detail::read_into(dj, "p_state", cfg.p_state);
        detail::read_into(dj, "p_flux", cfg.p_flux);
        int p_control = 1;
        detail::read_into(dj, "p_control", p_control);
        if (p_control != 1) throw std::invalid_argument("config: p_control must be 1");
    }
    if (cfg.n < 1) throw std::invalid_argument("config: n must be >= 1");
    if (cfg.p_state < 1 || cfg.p_state > 2) throw std::invalid_argument("config: p_state must be 1 or 2");
    if (cfg.p_flux < 1 || cfg.p_flux > 2) throw std::invalid_argument("config: p_flux must be 1 or 2");
    if (j.contains("alg1")) {
        const auto& aj = j.at("alg1");
        detail::reject_unknown(aj, {"i_max", "eps"}, "alg1");
        detail::read_into(aj, "i_max", cfg.pg.alg1.i_max);
        detail::read_into(aj, "eps", cfg.pg.alg1.eps);
    }
    if (j.contains("pg")) {
        const auto& gj = j.at("pg");
        detail::reject_unknown(gj, {"i_max_pg", "eps_pg", "lambda_max", "golden_tol"}, "pg");
        detail::read_into(gj, "i_max_pg", cfg.pg.i_max_pg);
        detail::read_into(gj, "eps_pg", cfg.pg.eps_pg);
        detail::read_into(gj, "lambda_max", cfg.pg.lambda_max);
        detail::read_into(gj, "golden_tol", cfg.pg.golden_tol);
    }
    cfg.pg.validate();
    if (j.contains("c_omega")) {
        double co = 0;
        detail::read_into(j, "c_omega", co);
        if (!(co >= kFriedrichsUnitSquare - 1e-12))
            throw std::invalid_argument(
                "config: c_omega below the unit-square Friedrichs constant would void the bounds");
        cfg.c_omega = co;
    }
    if (j.contains("output")) {
        const auto& oj = j.at("output");
        detail::reject_unknown(oj, {"dir"}, "output");
        detail::read_into(oj, "dir", cfg.out_dir);
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    return parse_config(j);
}

// Control coefficient file: first line is the count, then one coefficient per
// line, DG1 triangle-major node-minor ordering.
inline Eigen::VectorXd read_control_file(const std::string& path, int expected) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("control file: cannot open " + path);
    long long count = -1;
    if (!(in >> count)) throw std::invalid_argument("control file: missing count header");
    if (count != expected)
        throw std::invalid_argument("control file: size " + std::to_string(count) +
                                    " does not match the control space (" + std::to_string(expected) +
                                    ")");
    Eigen::VectorXd v(expected);
    for (int i = 0; i < expected; ++i)
        if (!(in >> v[i])) throw std::invalid_argument("control file: truncated or malformed data");
    return v;
}

namespace detail {

inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace detail

inline void write_trace_csv(std::ostream& os, const PgTrace& trace) {
    os << "iter,J_lower_v,J_upper_v,J_lower_u,step,err_sq_lower,err_sq_upper\n";
    for (const auto& r : trace.records) {
        os << r.iteration << ',' << detail::fmt17(r.j_lower_v) << ',' << detail::fmt17(r.j_upper_v)
           << ',' << detail::fmt17(r.j_lower_u) << ',' << detail::fmt17(r.step) << ','
           << detail::fmt17(r.err_sq_lower) << ',' << detail::fmt17(r.err_sq_upper) << '\n';
    }
}

inline nlohmann::json summary_json(const nlohmann::json& config_echo, const PgTrace& trace) {
    nlohmann::json s;
    s["config"] = config_echo;
    s["iterations"] = trace.records.size();
    if (!trace.records.empty()) {
        s["j_lower_v"] = trace.records.back().j_lower_v;
        s["j_upper_v"] = trace.records.back().j_upper_v;
        s["j_lower_u"] = trace.j_lower_u_final;
        s["err_sq_lower_final"] = trace.records.back().err_sq_lower;
        s["err_sq_upper_final"] = trace.records.back().err_sq_upper;
    }
    return s;
}

}  // namespace ocpb
