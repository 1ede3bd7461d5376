#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "ocpbounds/io.hpp"
#include "ocpbounds/verify.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

using namespace ocpb;

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    return j;
}

int cmd_run(const std::string& config_path, const std::string& out_override) {
    nlohmann::json echo = read_json(config_path);
    RunConfig cfg = parse_config(echo);
    if (!out_override.empty()) cfg.out_dir = out_override;
    std::filesystem::create_directories(cfg.out_dir);

    ProblemData p = cfg.problem();
    auto mesh = unit_square_mesh(cfg.n);
    Discretization d(mesh, cfg.p_state, cfg.p_flux, p);
    FeFunction v0 = project(FeFunction(d.control), p.admissible);

    PgTrace trace;
    std::string failure;
    try {
        trace = projected_gradient(v0, d, p, cfg.pg);
    } catch (const PgAborted& e) {
        trace = e.partial;
        failure = e.what();
    }
    for (const auto& r : trace.records)
        std::printf("iter %d  J_lower_v=%.12g  J_upper_v=%.12g  J_lower_u=%.12g  step=%.6g\n",
                    r.iteration, r.j_lower_v, r.j_upper_v, r.j_lower_u, r.step);

    {
        std::ofstream csv(cfg.out_dir + "/trace.csv");
        write_trace_csv(csv, trace);
    }
    nlohmann::json summary = summary_json(echo, trace);
    if (!failure.empty()) summary["error"] = failure;
    if (failure.empty() && p.admissible.kind == AdmissibleSet::Kind::unconstrained) {
        auto sol = solve_unconstrained_system(p, d.state, d.control);
        auto est = minimize_majorant_unconstrained(sol.state, p, d.flux);
        summary["unconstrained"] = {{"j_h", discrete_cost(sol.control, d, p)},
                                    {"majorant_error_bound", est.majorant},
                                    {"beta", est.beta}};
    }
    {
        std::ofstream js(cfg.out_dir + "/summary.json");
        js << summary.dump(2) << '\n';
    }
    if (!failure.empty()) {
        std::cerr << "error: " << failure << " (partial trace written)\n";
        return kExitNumeric;
    }
    std::printf("wrote %s/trace.csv and %s/summary.json\n", cfg.out_dir.c_str(), cfg.out_dir.c_str());
    return 0;
}

int cmd_estimate(const std::string& config_path, const std::string& control_path) {
    RunConfig cfg = parse_config(read_json(config_path));
    ProblemData p = cfg.problem();
    auto mesh = unit_square_mesh(cfg.n);
    Discretization d(mesh, cfg.p_state, cfg.p_flux, p);
    FeFunction v(d.control);
    if (!control_path.empty()) {
        v.coeffs = read_control_file(control_path, d.control.n_dofs);
    } else {
        const ManufacturedCase& c = cfg.problem_case;
        v = project(interpolate(d.control, [&](double x, double y) { return c.u_opt(x, y); }),
                    p.admissible);
    }
    CostBounds cb = generate_cost_estimates(v, d, p, cfg.pg.alg1);
    std::printf("J_lower_v %.17g\n", cb.j_lower_v);
    std::printf("J_upper_v %.17g\n", cb.j_upper_v);
    std::printf("J_lower_u %.17g\n", cb.j_lower_u);
    return 0;
}

int cmd_dofs(const std::string& config_path) {
    RunConfig cfg = parse_config(read_json(config_path));
    auto mesh = unit_square_mesh(cfg.n);
    auto dg = build_space(mesh, Family::discontinuous, 1);
    auto lag = build_space(mesh, Family::lagrange, cfg.p_state);
    auto rt = build_space(mesh, Family::raviart_thomas, cfg.p_flux);
    std::printf("%d %d %d\n", dg.n_dofs, lag.n_dofs, rt.n_dofs);
    return 0;
}

int cmd_verify(bool inject) {
    VerifyOptions opts;
    opts.inject_majorant_sign_error = inject;
    return run_verification(std::cout, opts) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Guaranteed two-sided cost bounds for elliptic optimal control"};
    app.require_subcommand(1);

    std::string run_config, run_out;
    auto* run = app.add_subcommand("run", "projected gradient run with guaranteed cost bounds");
    run->add_option("--config", run_config, "JSON configuration file")->required();
    run->add_option("--out", run_out, "output directory (overrides the config)");

    std::string est_config, est_control;
    auto* est = app.add_subcommand("estimate", "two-sided bounds for a fixed control");
    est->add_option("--config", est_config, "JSON configuration file")->required();
    est->add_option("--control", est_control,
                    "control coefficient file (default: interpolated closed-form optimum)");

    std::string dofs_config;
    auto* dofs = app.add_subcommand("dofs", "print space dimensions: DG Lagrange RT");
    dofs->add_option("--config", dofs_config, "JSON configuration file")->required();

    bool inject = false;
    auto* ver = app.add_subcommand("verify", "run the cross-module invariant suite");
    ver->add_flag("--inject-majorant-sign-error", inject)->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (run->parsed()) return cmd_run(run_config, run_out);
        if (est->parsed()) return cmd_estimate(est_config, est_control);
        if (dofs->parsed()) return cmd_dofs(dofs_config);
        return cmd_verify(inject);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    }
}
