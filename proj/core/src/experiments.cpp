#include "phasorflow/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <set>
#include <thread>

#include "phasorflow/errors.hpp"
#include "phasorflow/feeder_io.hpp"
#include "phasorflow/rng.hpp"

namespace phasorflow {

namespace {

constexpr double kDeg = 180.0 / std::numbers::pi;

double wrapped_deg(double rad) { return std::remainder(rad, 2.0 * std::numbers::pi) * kDeg; }

}  // namespace

ErrorMetrics error_metrics(const Network& net, const PhasorSolution& exact, const LinearSolution& approx) {
    const PhaseIndex index(net);
    if (exact.V.size() != index.node_phase_count() || approx.E.size() != index.node_phase_count() ||
        approx.Theta.size() != index.node_phase_count() || exact.S_line.size() != index.line_phase_count() ||
        approx.P.size() != index.line_phase_count() || approx.Q.size() != index.line_phase_count())
        throw DimensionError("exact and linear solutions do not share a topology");
    ErrorMetrics m;
    for (int k = 0; k < index.node_phase_count(); ++k) {
        const Complex v = exact.V[k];
        m.eps_mag = std::max(m.eps_mag, std::abs(std::abs(v) - std::sqrt(std::max(approx.E[k], 0.0))));
        m.eps_angle = std::max(m.eps_angle, std::abs(wrapped_deg(std::arg(v) - approx.Theta[k])));
    }
    for (int l = 0; l < index.line_phase_count(); ++l)
        m.eps_power = std::max(m.eps_power, std::abs(exact.S_line[l] - Complex(approx.P[l], approx.Q[l])));
    return m;
}

double substation_power(const Network& net, const PhasorSolution& exact) {
    const PhaseIndex index(net);
    if (exact.S_line.size() != index.line_phase_count()) throw DimensionError("solution does not match the network");
    const std::string& slack = net.slack();
    double total = 0.0;
    for (int li : index.closed_lines()) {
        const LineSpec& l = net.lines()[li];
        if (l.from != slack && l.to != slack) continue;
        for (Phase p : l.phases) total += std::abs(exact.S_line[index.line_phase(li, p)]);
    }
    return total;
}

std::vector<double> grid_values(double lo, double hi, double step) {
    if (!(step > 0.0) || !(hi >= lo) || !std::isfinite(lo) || !std::isfinite(hi))
        throw ValidationError("grid must satisfy lo <= hi and step > 0");
    const long n = std::lround(std::floor((hi - lo) / step + 1e-9));
    std::vector<double> out;
    for (long i = 0; i <= n; ++i) out.push_back(lo + static_cast<double>(i) * step);
    return out;
}

std::vector<Channel> spot_load_channels(const Network& net) {
    std::set<Channel> ch;
    for (const LoadSpec& l : net.loads()) {
        if (l.spot) ch.insert({l.node, l.phase});
    }
    return {ch.begin(), ch.end()};
}

Network with_sampled_loads(const Network& net, const std::vector<Channel>& channels, const std::vector<Complex>& d,
                           double beta_S, double beta_Z) {
    if (channels.size() != d.size()) throw DimensionError("one sampled load per channel is required");
    NetworkData data = net.data();
    data.loads.clear();
    data.caps.clear();
    for (std::size_t i = 0; i < channels.size(); ++i)
        data.loads.push_back({channels[i].node, channels[i].phase, d[i], beta_S, beta_Z, true, ""});
    return Network(std::move(data));
}

std::vector<ErrorRecord> monte_carlo(const Network& net, const MonteCarloOptions& opts) {
    if (opts.per_cell < 0) throw ValidationError("scenarios per cell must be nonnegative");
    for (double v : opts.dr_values)
        if (!(v >= 0.0)) throw ValidationError("grid values must be nonnegative");
    for (double v : opts.di_values)
        if (!(v >= 0.0)) throw ValidationError("grid values must be nonnegative");
    const std::vector<Channel> channels = spot_load_channels(net);
    if (channels.empty()) throw ValidationError("network has no spot loads to sample");

    const std::size_t n_di = opts.di_values.size();
    const std::size_t n_cells = opts.dr_values.size() * n_di;
    std::vector<std::vector<ErrorRecord>> cells(n_cells);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto work = [&]() {
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= n_cells) return;
            try {
                const double dr = opts.dr_values[c / n_di];
                const double di = opts.di_values[c % n_di];
                std::mt19937_64 g = cell_stream(opts.seed, c);
                std::vector<ErrorRecord>& out = cells[c];
                out.reserve(opts.per_cell);
                std::vector<Complex> d(channels.size());
                for (int s = 0; s < opts.per_cell; ++s) {
                    for (Complex& x : d) {
                        const double re = dr * uniform01(g);
                        const double im = di * uniform01(g);
                        x = Complex(re, im);
                    }
                    ErrorRecord rec{dr, di, s, true, 0.0, 0.0, 0.0, 0.0};
                    const Network sample = with_sampled_loads(net, channels, d, opts.beta_S, opts.beta_Z);
                    try {
                        const PhasorSolution exact = solve_exact(sample, {}, opts.newton);
                        const LinearSolution lin = solve_linear(sample);
                        const ErrorMetrics m = error_metrics(sample, exact, lin);
                        rec.eps_mag = m.eps_mag;
                        rec.eps_angle = m.eps_angle;
                        rec.eps_power = m.eps_power;
                        rec.substation_power = substation_power(sample, exact);
                    } catch (const ConvergenceError&) {
                        rec.converged = false;
                    } catch (const SingularMatrixError&) {
                        rec.converged = false;
                    }
                    out.push_back(rec);
                }
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n_cells);
                return;
            }
        }
    };

    unsigned workers = opts.workers ? opts.workers : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n_cells, 1)));
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < workers; ++i) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<ErrorRecord> records;
    records.reserve(n_cells * static_cast<std::size_t>(opts.per_cell));
    for (auto& c : cells) records.insert(records.end(), c.begin(), c.end());
    return records;
}

Envelope envelope(const std::vector<ErrorRecord>& records, double s_max) {
    Envelope e;
    for (const ErrorRecord& r : records) {
        if (!r.converged || r.substation_power > s_max) continue;
        ++e.count;
        e.eps_mag = std::max(e.eps_mag, r.eps_mag);
        e.eps_angle = std::max(e.eps_angle, r.eps_angle);
        e.eps_power = std::max(e.eps_power, r.eps_power);
    }
    return e;
}

// ---- scenarios ----

ScenarioSpec parse_scenario(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    try {
        ScenarioSpec s;
        s.name = j.value("name", "scenario");
        const std::string mode = j.value("mode", "single");
        if (mode != "single" && mode != "sequential") throw ValidationError("mode must be single or sequential");
        s.sequential = mode == "sequential";
        for (const auto& f : j.at("feeders")) {
            FeederSpec fs;
            fs.file = base_dir / f.at("file").get<std::string>();
            for (const auto& m : f.value("mods", nlohmann::json::array()))
                fs.mods.push_back(base_dir / m.get<std::string>());
            if (f.contains("extra")) fs.extra = parse_modifications(f.at("extra"));
            s.feeders.push_back(std::move(fs));
        }
        if (s.feeders.size() != 2) throw ValidationError("a scenario joins exactly two feeders");
        for (const auto& w : j.at("switches")) {
            s.switches.push_back({w.value("id", w.at("from").get<std::string>() + "-" + w.at("to").get<std::string>()),
                                  w.at("from"), w.at("to"), w.at("config"), w.at("length_ft")});
        }
        if (j.contains("der")) {
            s.der_nodes = j.at("der").at("nodes").get<std::vector<std::string>>();
            s.der_capacity = j.at("der").at("capacity");
        }
        if (j.contains("vvc")) {
            const auto& v = j.at("vvc");
            s.vvc = mods::AddVvc{v.at("nodes").get<std::vector<std::string>>(), v.at("q_min"), v.at("q_max"),
                                 v.at("v_min"), v.at("v_max")};
        }
        if (j.contains("e_bounds")) {
            const auto b = j.at("e_bounds").get<std::vector<double>>();
            if (b.size() != 2) throw ValidationError("e_bounds must be [E_min, E_max]");
            s.bounds = {b[0], b[1]};
        }
        for (const auto& c : j.at("cases")) {
            CaseSpec cs{c.at("name"), std::nullopt};
            if (c.contains("rho")) {
                const auto r = c.at("rho").get<std::vector<double>>();
                if (r.size() != 3) throw ValidationError("rho must be [rho_E, rho_theta, rho_w]");
                cs.weights = OpfWeights{r[0], r[1], r[2]};
            }
            s.cases.push_back(std::move(cs));
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("scenario spec: ") + e.what());
    }
}

ScenarioSpec load_scenario_file(const std::filesystem::path& path) {
    return parse_scenario(read_json_file(path), path.parent_path());
}

Network build_scenario_network(const ScenarioSpec& spec) {
    std::vector<Network> feeders;
    for (const FeederSpec& f : spec.feeders) {
        Network net = load_feeder_file(f.file);
        for (const auto& m : f.mods) net = apply_modifications(net, parse_modifications(read_json_file(m)));
        feeders.push_back(apply_modifications(net, f.extra));
    }
    if (feeders.size() != 2) throw ValidationError("a scenario joins exactly two feeders");
    Network net = merge_with_switch(feeders[0], feeders[1], spec.switches);
    std::vector<Modification> extra;
    if (!spec.der_nodes.empty()) extra.push_back(mods::AddDer{spec.der_nodes, spec.der_capacity});
    if (spec.vvc) extra.push_back(*spec.vvc);
    return apply_modifications(net, extra);
}

namespace {

template <class F>
auto tagged(const std::string& tag, F&& f) {
    try {
        return f();
    } catch (const ConvergenceError& e) {
        throw ConvergenceError(tag + ": " + e.what(), e.residual_history());
    } catch (const InfeasibleError& e) {
        throw InfeasibleError(tag + ": " + e.what(), e.violated_constraints());
    } catch (const SingularMatrixError& e) {
        throw SingularMatrixError(tag + ": " + e.what());
    }
}

}  // namespace

SwitchingAction run_switching_action(const Network& net, const SwitchSpec& sw, const std::vector<CaseSpec>& cases,
                                     const OpfBounds& bounds, const AdmmSettings& admm, const NewtonOptions& newton) {
    const LineSpec& line = net.lines()[net.line_index(sw.id)];
    if (!line.is_switch || line.closed) throw ValidationError("switch " + sw.id + " is not an open switch");
    const CMatrix Y = line_admittance(line);
    const int n1 = net.node_index(line.from);
    const int n2 = net.node_index(line.to);

    SwitchingAction action{sw.id, line.from, line.to, {}};
    for (const CaseSpec& cs : cases) {
        const std::string tag = "switch " + sw.id + ", case " + cs.name;
        CaseResult r;
        r.name = cs.name;
        r.weights = cs.weights;
        if (cs.weights) {
            const OpfProblem prob = build_opf(net, {{line.from, line.to}}, *cs.weights, bounds);
            const Dispatch d = tagged(tag, [&] { return solve_opf(prob, admm); });
            r.dispatch = d.w;
            r.opf_stats = d.stats;
            r.opf_terms = d.terms;
            r.kkt = kkt_check(prob, d);
        }
        const PhasorSolution open = tagged(tag + " (open)", [&] { return solve_exact(net, r.dispatch, newton); });
        const Network closed_net = close_switch(net, sw.id);
        const PhasorSolution closed =
            tagged(tag + " (closed)", [&] { return solve_exact(closed_net, r.dispatch, newton); });
        r.open_iterations = open.iterations;
        r.closed_iterations = closed.iterations;

        const PhaseIndex oi(net);
        const PhaseIndex ci(closed_net);
        const int li = closed_net.line_index(sw.id);
        const int k = line.phases.size();
        Eigen::VectorXcd v1(k), v2(k);
        for (int i = 0; i < k; ++i) {
            v1[i] = open.V[oi.node_phase(n1, line.phases.at(i))];
            v2[i] = open.V[oi.node_phase(n2, line.phases.at(i))];
        }
        const Eigen::VectorXcd est = closure_flow_estimate(v1, v2, Y);
        for (int i = 0; i < k; ++i) {
            const Phase p = line.phases.at(i);
            PhaseResult pr;
            pr.phase = p;
            pr.v_k1 = v1[i];
            pr.v_k2 = v2[i];
            pr.dmag = std::abs(v1[i]) - std::abs(v2[i]);
            pr.dangle_deg = wrapped_deg(std::arg(v1[i]) - std::arg(v2[i]));
            pr.closure_estimate = est[i];
            pr.post_closure = closed.V[ci.node_phase(n1, p)] * std::conj(closed.I[ci.line_phase(li, p)]);
            r.phases.push_back(pr);
        }
        action.cases.push_back(std::move(r));
    }
    return action;
}

ScenarioReport run_switch_scenario(const ScenarioSpec& spec, const AdmmSettings& admm, const NewtonOptions& newton) {
    const Network net = build_scenario_network(spec);
    ScenarioReport rep{spec.name, false, {}};
    for (const SwitchSpec& sw : spec.switches)
        rep.actions.push_back(run_switching_action(net, sw, spec.cases, spec.bounds, admm, newton));
    return rep;
}

ScenarioReport run_sequential_switching(const ScenarioSpec& spec, const AdmmSettings& admm,
                                        const NewtonOptions& newton) {
    Network net = build_scenario_network(spec);
    ScenarioReport rep{spec.name, true, {}};
    for (const SwitchSpec& sw : spec.switches) {
        rep.actions.push_back(run_switching_action(net, sw, spec.cases, spec.bounds, admm, newton));
        net = close_switch(net, sw.id);
    }
    return rep;
}

ScenarioReport run_scenario(const ScenarioSpec& spec, const AdmmSettings& admm, const NewtonOptions& newton) {
    return spec.sequential ? run_sequential_switching(spec, admm, newton) : run_switch_scenario(spec, admm, newton);
}

namespace {

nlohmann::json polar_json(Complex v) { return {{"mag", std::abs(v)}, {"angle_deg", std::arg(v) * kDeg}}; }

}  // namespace

nlohmann::json report_to_json(const ScenarioReport& report) {
    nlohmann::json j;
    j["name"] = report.name;
    j["mode"] = report.sequential ? "sequential" : "single";
    j["actions"] = nlohmann::json::array();
    for (const SwitchingAction& a : report.actions) {
        nlohmann::json ja{{"switch", a.switch_id}, {"k1", a.k1}, {"k2", a.k2}, {"cases", nlohmann::json::array()}};
        for (const CaseResult& c : a.cases) {
            nlohmann::json jc;
            jc["name"] = c.name;
            if (c.weights) jc["rho"] = {c.weights->rho_e, c.weights->rho_theta, c.weights->rho_w};
            jc["dispatch"] = dispatch_to_json(c.dispatch);
            if (c.opf_stats) {
                jc["opf"] = {{"status", c.opf_stats->status},
                             {"iterations", c.opf_stats->iterations},
                             {"objective", c.opf_terms->objective},
                             {"C_E", c.opf_terms->C_E},
                             {"C_theta", c.opf_terms->C_theta},
                             {"C_w", c.opf_terms->C_w},
                             {"kkt_stationarity", c.kkt->stationarity},
                             {"kkt_complementarity", c.kkt->complementarity},
                             {"kkt_pass", c.kkt->pass()}};
            }
            jc["newton_iterations"] = {{"open", c.open_iterations}, {"closed", c.closed_iterations}};
            nlohmann::json ph = nlohmann::json::object();
            for (const PhaseResult& p : c.phases) {
                ph[std::string(1, to_char(p.phase))] = {{"V_k1", polar_json(p.v_k1)},
                                                        {"V_k2", polar_json(p.v_k2)},
                                                        {"dmag", p.dmag},
                                                        {"dangle_deg", p.dangle_deg},
                                                        {"S_closure_estimate", complex_to_json(p.closure_estimate)},
                                                        {"S_post_closure", complex_to_json(p.post_closure)}};
            }
            jc["phases"] = ph;
            ja["cases"].push_back(jc);
        }
        j["actions"].push_back(ja);
    }
    return j;
}

}  // namespace phasorflow
