// phasorflow command-line front end.
//
// Exit codes: 0 ok, 1 invalid input, 2 solver did not converge, 3 infeasible OPF, 64 usage.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "phasorflow/errors.hpp"
#include "phasorflow/experiments.hpp"
#include "phasorflow/feeder_io.hpp"
#include "phasorflow/version.hpp"

namespace pf = phasorflow;
using nlohmann::json;

namespace {

enum Exit : int { kOk = 0, kInvalid = 1, kNoConvergence = 2, kInfeasible = 3, kUsage = 64 };

constexpr double kMaxTolerance = 1e-6;

struct Common {
    std::string input;
    std::vector<std::string> mods;
    std::string output;
    double newton_tol = 1e-9;
    int newton_max_iter = 50;
    std::string angles = "deg";
};

void add_version(CLI::App* app) {
    app->add_flag_callback(
        "--version",
        [] {
            std::cout << "phasorflow " << pf::kVersion << "\n";
            throw CLI::Success();
        },
        "Print the version and exit");
}

void add_output(CLI::App* app, Common& c) {
    app->add_option("-o,--output", c.output, "Output file (default: stdout)");
}

void add_newton(CLI::App* app, Common& c) {
    app->add_option("--tol", c.newton_tol, "Newton mismatch tolerance (at most 1e-6)")->check(CLI::PositiveNumber);
    app->add_option("--max-iter", c.newton_max_iter, "Newton iteration cap")->check(CLI::PositiveNumber);
}

void add_feeder(CLI::App* app, Common& c) {
    app->add_option("feeder", c.input, "Feeder JSON")->required()->check(CLI::ExistingFile);
    app->add_option("--mods,--script", c.mods, "Modification script, applied in order (repeatable)")
        ->check(CLI::ExistingFile);
}

pf::NewtonOptions newton_options(const Common& c) {
    if (c.newton_tol > kMaxTolerance) throw pf::ValidationError("--tol may not exceed 1e-6");
    return {c.newton_tol, c.newton_max_iter};
}

pf::Network load_network(const Common& c) {
    pf::Network net = pf::load_feeder_file(c.input);
    for (const auto& m : c.mods) net = pf::apply_modifications(net, pf::parse_modifications(pf::read_json_file(m)));
    return net;
}

void emit(const Common& c, const std::string& text) {
    if (c.output.empty()) {
        std::cout << text;
    } else {
        pf::write_file_atomic(c.output, text);
    }
}

void emit_json(const Common& c, const json& j) { emit(c, j.dump(2) + "\n"); }

double angle_out(const Common& c, double rad) { return c.angles == "rad" ? rad : rad * 180.0 / std::numbers::pi; }

std::string np_name(const pf::Network& net, const pf::PhaseIndex& index, int k) {
    const auto& np = index.node_phase_at(k);
    return net.nodes()[np.node].id + "." + pf::to_char(np.phase);
}

std::string lp_name(const pf::Network& net, const pf::PhaseIndex& index, int l) {
    const auto& lp = index.line_phase_at(l);
    return net.lines()[lp.line].id + "." + pf::to_char(lp.phase);
}

json exact_json(const Common& c, const pf::Network& net, const pf::PhasorSolution& sol) {
    const pf::PhaseIndex index(net);
    json nodes = json::object();
    for (int k = 0; k < index.node_phase_count(); ++k)
        nodes[np_name(net, index, k)] = {{"mag", std::abs(sol.V[k])}, {"angle", angle_out(c, std::arg(sol.V[k]))}};
    json lines = json::object();
    for (int l = 0; l < index.line_phase_count(); ++l)
        lines[lp_name(net, index, l)] = {{"S", pf::complex_to_json(sol.S_line[l])},
                                         {"I", pf::complex_to_json(sol.I[l])}};
    const auto s0 = pf::slack_power(net, sol);
    return {{"network", net.name()},
            {"angle_unit", c.angles},
            {"iterations", sol.iterations},
            {"residual", sol.residual_norm},
            {"slack_power", {pf::complex_to_json(s0[0]), pf::complex_to_json(s0[1]), pf::complex_to_json(s0[2])}},
            {"voltages", nodes},
            {"lines", lines}};
}

json linear_json(const Common& c, const pf::Network& net, const pf::LinearSolution& sol) {
    const pf::PhaseIndex index(net);
    json nodes = json::object();
    for (int k = 0; k < index.node_phase_count(); ++k)
        nodes[np_name(net, index, k)] = {{"E", sol.E[k]}, {"mag", std::sqrt(std::max(sol.E[k], 0.0))},
                                         {"angle", angle_out(c, sol.Theta[k])}};
    json lines = json::object();
    for (int l = 0; l < index.line_phase_count(); ++l) lines[lp_name(net, index, l)] = {{"P", sol.P[l]}, {"Q", sol.Q[l]}};
    return {{"network", net.name()},
            {"angle_unit", c.angles},
            {"residual", sol.residual_norm},
            {"voltages", nodes},
            {"lines", lines}};
}

bool wants_csv(const Common& c) { return std::filesystem::path(c.output).extension() == ".csv"; }

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string exact_csv(const Common& c, const pf::Network& net, const pf::PhasorSolution& sol) {
    const pf::PhaseIndex index(net);
    std::string out = "kind,id,phase,mag_pu,angle_" + c.angles + ",P_pu,Q_pu\n";
    for (int k = 0; k < index.node_phase_count(); ++k) {
        const auto& np = index.node_phase_at(k);
        out += "node," + net.nodes()[np.node].id + "," + pf::to_char(np.phase) + "," + num(std::abs(sol.V[k])) + "," +
               num(angle_out(c, std::arg(sol.V[k]))) + ",,\n";
    }
    for (int l = 0; l < index.line_phase_count(); ++l) {
        const auto& lp = index.line_phase_at(l);
        out += "line," + net.lines()[lp.line].id + "," + pf::to_char(lp.phase) + ",,," + num(sol.S_line[l].real()) + "," +
               num(sol.S_line[l].imag()) + "\n";
    }
    return out;
}

std::string linear_csv(const Common& c, const pf::Network& net, const pf::LinearSolution& sol) {
    const pf::PhaseIndex index(net);
    std::string out = "kind,id,phase,E_pu2,mag_pu,angle_" + c.angles + ",P_pu,Q_pu\n";
    for (int k = 0; k < index.node_phase_count(); ++k) {
        const auto& np = index.node_phase_at(k);
        out += "node," + net.nodes()[np.node].id + "," + pf::to_char(np.phase) + "," + num(sol.E[k]) + "," +
               num(std::sqrt(std::max(sol.E[k], 0.0))) + "," + num(angle_out(c, sol.Theta[k])) + ",,\n";
    }
    for (int l = 0; l < index.line_phase_count(); ++l) {
        const auto& lp = index.line_phase_at(l);
        out += "line," + net.lines()[lp.line].id + "," + pf::to_char(lp.phase) + ",,,," + num(sol.P[l]) + "," +
               num(sol.Q[l]) + "\n";
    }
    return out;
}

void diagnostic(const std::string& status, const std::string& message, json extra = json::object()) {
    extra["status"] = status;
    extra["message"] = message;
    std::cerr << extra.dump() << "\n";
}

std::string format_record(const pf::ErrorRecord& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d,%d,%.17g,%.17g,%.17g,%.17g\n", r.dr, r.di, r.scenario,
                  r.converged ? 1 : 0, r.eps_mag, r.eps_angle, r.eps_power, r.substation_power);
    return buf;
}

std::vector<double> parse_grid(const std::string& text) {
    std::stringstream ss(text);
    std::string part;
    std::vector<double> v;
    while (std::getline(ss, part, ':')) {
        try {
            v.push_back(std::stod(part));
        } catch (const std::exception&) {
            throw pf::ValidationError("grid must be lo:hi:step");
        }
    }
    if (v.size() != 3) throw pf::ValidationError("grid must be lo:hi:step");
    return pf::grid_values(v[0], v[1], v[2]);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Unbalanced three-phase power flow, linear model, phasor-tracking OPF and switching studies",
                 "phasorflow"};
    app.set_version_flag("--version", std::string("phasorflow ") + pf::kVersion);
    app.require_subcommand(1);

    Common c;

    auto* validate = app.add_subcommand("validate", "Check a feeder or scenario document");
    add_version(validate);
    add_feeder(validate, c);

    auto* modify = app.add_subcommand("modify", "Apply modification scripts and write the resulting feeder");
    add_version(modify);
    add_feeder(modify, c);
    add_output(modify, c);

    std::string dispatch_file;
    bool compare = false;
    auto* solve = app.add_subcommand("solve", "Exact Newton-Raphson power flow");
    add_version(solve);
    add_feeder(solve, c);
    add_output(solve, c);
    add_newton(solve, c);
    solve->add_option("--dispatch", dispatch_file, "DER dispatch JSON")->check(CLI::ExistingFile);
    solve->add_option("--angles", c.angles, "Angle unit for output")->check(CLI::IsMember({"deg", "rad"}));

    auto* linearize = app.add_subcommand("linearize", "Solve the linear model");
    add_version(linearize);
    add_feeder(linearize, c);
    add_output(linearize, c);
    add_newton(linearize, c);
    linearize->add_option("--dispatch", dispatch_file, "DER dispatch JSON")->check(CLI::ExistingFile);
    linearize->add_flag("--compare", compare, "Also solve exactly and report the worst-case errors");
    linearize->add_option("--angles", c.angles, "Angle unit for output")->check(CLI::IsMember({"deg", "rad"}));

    std::vector<std::string> targets;
    pf::OpfWeights weights;
    std::vector<double> e_bounds{0.9025, 1.1025};
    pf::AdmmSettings admm;
    auto* opf = app.add_subcommand("opf", "Phasor-tracking OPF between two nodes");
    add_version(opf);
    add_feeder(opf, c);
    add_output(opf, c);
    opf->add_option("--targets", targets, "Target pair k1:k2 (repeatable)")->required();
    opf->add_option("--rho-e", weights.rho_e, "Weight on squared-magnitude differences");
    opf->add_option("--rho-theta", weights.rho_theta, "Weight on angle differences");
    opf->add_option("--rho-w", weights.rho_w, "Weight on dispatch effort");
    opf->add_option("--e-bounds", e_bounds, "Squared-magnitude bounds E_min E_max")->expected(2);
    opf->add_option("--eps", admm.eps_abs, "Solver tolerance (at most 1e-6)")->check(CLI::PositiveNumber);
    opf->add_option("--admm-max-iter", admm.max_iterations, "Solver iteration cap")->check(CLI::PositiveNumber);

    std::string grid = "0:0.15:0.01";
    std::string grid_di;
    pf::MonteCarloOptions mc;
    auto* montecarlo = app.add_subcommand("montecarlo", "Model-error Monte Carlo over a load grid (CSV output)");
    add_version(montecarlo);
    add_feeder(montecarlo, c);
    add_output(montecarlo, c);
    add_newton(montecarlo, c);
    montecarlo->add_option("--grid", grid, "Grid lo:hi:step for both load components");
    montecarlo->add_option("--grid-di", grid_di, "Separate reactive grid lo:hi:step");
    montecarlo->add_option("--per-cell", mc.per_cell, "Scenarios per grid cell")->check(CLI::NonNegativeNumber);
    montecarlo->add_option("--seed", mc.seed, "RNG seed");
    montecarlo->add_option("--workers", mc.workers, "Worker threads (0: all cores)");

    auto* scenario = app.add_subcommand("scenario", "Run a switching scenario (JSON report)");
    add_version(scenario);
    scenario->add_option("spec", c.input, "Scenario JSON")->required()->check(CLI::ExistingFile);
    add_output(scenario, c);
    add_newton(scenario, c);
    scenario->add_option("--eps", admm.eps_abs, "OPF solver tolerance (at most 1e-6)")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        if (rc == 0) return kOk;
        return kUsage;
    }

    try {
        admm.eps_rel = admm.eps_abs;
        if (admm.eps_abs > kMaxTolerance) throw pf::ValidationError("--eps may not exceed 1e-6");

        if (validate->parsed()) {
            const json doc = pf::read_json_file(c.input);
            if (doc.is_object() && doc.contains("feeders")) {
                const pf::ScenarioSpec spec = pf::parse_scenario(doc, std::filesystem::path(c.input).parent_path());
                const pf::Network net = pf::build_scenario_network(spec);
                net.require_solvable();
                std::cout << "scenario " << spec.name << ": " << net.nodes().size() << " nodes, "
                          << net.lines().size() << " lines, " << spec.switches.size() << " switches, "
                          << net.der().size() << " DER channels\n";
                return kOk;
            }
            const pf::Network net = load_network(c);
            std::cout << "feeder " << net.name() << ": " << net.nodes().size() << " nodes, " << net.lines().size()
                      << " lines, " << net.loads().size() << " loads\n";
            try {
                net.require_solvable();
            } catch (const pf::ValidationError& e) {
                std::cout << "note: not solvable as is (" << e.what() << "); apply a modification script first\n";
            }
            return kOk;
        }
        if (modify->parsed()) {
            emit_json(c, pf::save_feeder(load_network(c)));
            return kOk;
        }
        if (solve->parsed()) {
            const pf::Network net = load_network(c);
            const pf::ChannelMap w = dispatch_file.empty() ? pf::ChannelMap{}
                                                           : pf::dispatch_from_json(pf::read_json_file(dispatch_file));
            const pf::PhasorSolution sol = pf::solve_exact(net, w, newton_options(c));
            if (wants_csv(c)) {
                emit(c, exact_csv(c, net, sol));
            } else {
                emit_json(c, exact_json(c, net, sol));
            }
            return kOk;
        }
        if (linearize->parsed()) {
            const pf::Network net = load_network(c);
            const pf::ChannelMap w = dispatch_file.empty() ? pf::ChannelMap{}
                                                           : pf::dispatch_from_json(pf::read_json_file(dispatch_file));
            const pf::LinearSolution lin = pf::solve_linear(net, w);
            if (wants_csv(c)) {
                emit(c, linear_csv(c, net, lin));
                return kOk;
            }
            json out = linear_json(c, net, lin);
            if (compare) {
                const pf::PhasorSolution ex = pf::solve_exact(net, w, newton_options(c));
                const pf::ErrorMetrics m = pf::error_metrics(net, ex, lin);
                out["errors"] = {{"eps_mag", m.eps_mag},
                                 {"eps_angle_deg", m.eps_angle},
                                 {"eps_power", m.eps_power},
                                 {"substation_power", pf::substation_power(net, ex)}};
            }
            emit_json(c, out);
            return kOk;
        }
        if (opf->parsed()) {
            const pf::Network net = load_network(c);
            std::vector<pf::TargetPair> pairs;
            for (const auto& t : targets) {
                const auto colon = t.find(':');
                if (colon == std::string::npos || colon == 0 || colon + 1 == t.size())
                    throw pf::ValidationError("target '" + t + "' is not k1:k2");
                pairs.push_back({t.substr(0, colon), t.substr(colon + 1)});
            }
            const pf::OpfProblem prob = pf::build_opf(net, pairs, weights, {e_bounds[0], e_bounds[1]});
            const pf::Dispatch d = pf::solve_opf(prob, admm);
            const pf::KktReport kkt = pf::kkt_check(prob, d);
            emit_json(c, {{"targets", targets},
                          {"rho", {weights.rho_e, weights.rho_theta, weights.rho_w}},
                          {"status", d.stats.status},
                          {"iterations", d.stats.iterations},
                          {"objective", d.terms.objective},
                          {"C_E", d.terms.C_E},
                          {"C_theta", d.terms.C_theta},
                          {"C_w", d.terms.C_w},
                          {"kkt", {{"stationarity", kkt.stationarity},
                                   {"complementarity", kkt.complementarity},
                                   {"pass", kkt.pass()}}},
                          {"dispatch", pf::dispatch_to_json(d.w)}});
            if (d.stats.status == "max_iterations") {
                diagnostic("no_convergence", "OPF solver reached its iteration cap");
                return kNoConvergence;
            }
            return kOk;
        }
        if (montecarlo->parsed()) {
            const pf::Network net = load_network(c);
            mc.dr_values = parse_grid(grid);
            mc.di_values = grid_di.empty() ? mc.dr_values : parse_grid(grid_di);
            mc.newton = newton_options(c);
            const auto records = pf::monte_carlo(net, mc);
            std::string csv = "dr,di,scenario,converged,eps_mag,eps_angle_deg,eps_power,substation_power\n";
            int failed = 0;
            for (const auto& r : records) {
                csv += format_record(r);
                failed += r.converged ? 0 : 1;
            }
            emit(c, csv);
            if (failed) std::cerr << failed << " of " << records.size() << " scenarios did not converge\n";
            return kOk;
        }
        if (scenario->parsed()) {
            const pf::ScenarioSpec spec = pf::load_scenario_file(c.input);
            emit_json(c, pf::report_to_json(pf::run_scenario(spec, admm, newton_options(c))));
            return kOk;
        }
    } catch (const pf::InfeasibleError& e) {
        diagnostic("infeasible", e.what(), {{"violated", e.violated_constraints()}});
        return kInfeasible;
    } catch (const pf::ConvergenceError& e) {
        diagnostic("no_convergence", e.what(), {{"residual_history", e.residual_history()}});
        return kNoConvergence;
    } catch (const pf::SingularMatrixError& e) {
        diagnostic("no_convergence", e.what());
        return kNoConvergence;
    } catch (const pf::Error& e) {
        diagnostic("invalid", e.what());
        return kInvalid;
    } catch (const std::exception& e) {
        diagnostic("invalid", e.what());
        return kInvalid;
    }
    return kUsage;
}
