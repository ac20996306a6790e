// Acceptance suite: one PASS/FAIL line per criterion, with indented detail lines.
// Exit status is nonzero if any criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "phasorflow/errors.hpp"
#include "phasorflow/experiments.hpp"
#include "phasorflow/linear_powerflow.hpp"
#include "test_support.hpp"

namespace pf = phasorflow;
using pf::Complex;

namespace {

// ---- tolerances ----

// C1: Monte Carlo envelopes
constexpr double kS1 = 1.0;
constexpr double kMag1 = 0.005;
constexpr double kAngle1 = 0.25;
constexpr double kPower1 = 0.02;
constexpr double kS2 = 1.5;
constexpr double kMag2 = 0.01;
// C2: IEEE-13 dual feeder
constexpr double kNcMag = 0.003;
constexpr double kNcAngle = 0.1;
constexpr double kPcDmag = 0.002;
constexpr double kPcDangle = 0.05;
constexpr double kPcFlow = 0.05;
constexpr double kPcRatio = 20.0;
// C3: dispatch
constexpr double kDispatch = 0.01;
// C4: IEEE-37 sequential
constexpr double kSeqDmag = 0.001;
constexpr double kSeqDangle = 0.01;
constexpr double kSeqFlow = 0.005;
// C5: properties
constexpr double kIdentity = 1e-8;
constexpr double kMn = 1e-15;
constexpr double kSweep = 1e-10;
constexpr double kOracle = 1e-6;
constexpr double kScaling = 1e-6;
constexpr double kKkt = 1e-6;
constexpr double kFlat = 1e-12;
constexpr double kSuiteSeconds = 60.0;
// C6: no systematic offset if the mean signed dispatch delta stays below this
constexpr double kOffset = 0.005;

// ---- reference values ----

struct Polar {
    double mag, deg;
};
struct PhaseRef {
    Polar k1, k2;
    double dmag, dangle;
    Complex s;
};
using CaseRef = std::array<PhaseRef, 3>;

const CaseRef kDual13Nc{{{{0.9890, -1.5997}, {0.9727, -3.2141}, 0.0163, 1.6144, {1.6476, 0.6027}},
                     {{0.9965, -120.7789}, {0.9888, -121.4874}, 0.0077, 0.7085, {1.1643, 0.5862}},
                     {{0.9825, 118.4644}, {0.9552, 117.0104}, 0.0273, 1.4540, {1.6205, 0.6595}}}};
const CaseRef kDual13Mc{{{{0.9789, -1.8451}, {0.9780, -3.1611}, 0.0009, 1.3160, {1.2697, -0.2390}},
                     {{0.9938, -120.8093}, {0.9942, -121.4237}, -0.0004, 0.6144, {0.8582, -0.1165}},
                     {{0.9656, 118.5646}, {0.9642, 117.0255}, 0.0014, 1.5391, {1.1944, -0.4384}}}};
const CaseRef kDual13Pc{{{{0.9793, -2.6921}, {0.9791, -2.7066}, 0.0002, 0.0144, {0.0051, 0.0108}},
                     {{0.9943, -121.0344}, {0.9944, -121.0353}, -0.0001, 0.0010, {0.0055, 0.0021}},
                     {{0.9649, 117.5846}, {0.9642, 117.5883}, 0.0007, -0.0038, {0.0100, 0.0242}}}};

const CaseRef kDual37NcFirst{{{{0.9784, -0.5147}, {0.9747, -0.6021}, 0.0037, 0.0874, {0.0852, 0.0348}},
                          {{0.9909, -120.3949}, {0.9893, -120.4620}, 0.0015, 0.0671, {0.0673, 0.0221}},
                          {{0.9749, 119.4164}, {0.9706, 119.3172}, 0.0043, 0.0991, {0.1100, 0.0442}}}};
const CaseRef kDual37PcFirst{{{{0.9765, -0.5587}, {0.9765, -0.5580}, 0.0000, -0.0007, {0.0005, 0.0005}},
                          {{0.9901, -120.4279}, {0.9901, -120.4290}, 0.0000, 0.0011, {0.0010, 0.0004}},
                          {{0.9727, 119.3669}, {0.9727, 119.3669}, 0.0000, -0.0000, {0.0001, 0.0005}}}};
const CaseRef kDual37NcSecond{{{{0.9882, -0.3003}, {0.9861, -0.3508}, 0.0020, 0.0505, {0.0581, 0.0252}},
                           {{0.9882, -120.2812}, {0.9861, -120.3289}, 0.0026, 0.0477, {0.0808, 0.0316}},
                           {{0.9882, 119.3006}, {0.9861, 119.1815}, 0.0033, 0.1190, {0.0867, 0.0280}}}};
const CaseRef kDual37PcSecond{{{{0.9872, -0.3257}, {0.9871, -0.3255}, 0.0001, -0.0002, {0.0013, 0.0011}},
                           {{0.9833, -120.3048}, {0.9832, -120.3052}, 0.0000, 0.0004, {0.0008, 0.0008}},
                           {{0.9787, 119.2415}, {0.9786, 119.2407}, 0.0000, 0.0009, {0.0009, 0.0006}}}};

struct DispatchRef {
    const char* node;
    pf::Phase phase;
    Complex w;
};
const std::vector<DispatchRef> kDual13Dispatch{
    {"1632", pf::Phase::a, {0.0324, 0.0171}},   {"1632", pf::Phase::b, {0.0302, 0.0195}},
    {"1632", pf::Phase::c, {0.0385, 0.0258}},   {"1675", pf::Phase::a, {0.0448, 0.0222}},
    {"1675", pf::Phase::b, {0.0428, 0.0259}},   {"1675", pf::Phase::c, {0.0418, 0.0274}},
    {"1684", pf::Phase::a, {0.0448, 0.0222}},   {"1684", pf::Phase::c, {0.0418, 0.0274}},
    {"2632", pf::Phase::a, {-0.0323, -0.0169}}, {"2632", pf::Phase::b, {-0.0302, -0.0193}},
    {"2632", pf::Phase::c, {-0.0384, -0.0252}}, {"2671", pf::Phase::a, {-0.0449, -0.0220}},
    {"2671", pf::Phase::b, {-0.0428, -0.0258}}, {"2671", pf::Phase::c, {-0.0422, -0.0269}},
};

// ---- helpers ----

std::vector<std::string> g_failed;

void verdict(const char* id, bool ok, const std::string& summary) {
    std::printf("%s %s  %s\n", id, ok ? "PASS" : "FAIL", summary.c_str());
    std::fflush(stdout);
    if (!ok) g_failed.emplace_back(id);
}

void detail(const char* fmt, auto... args) {
    std::printf("    ");
    std::printf(fmt, args...);
    std::printf("\n");
}

std::string strf(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double deg(Complex v) { return std::arg(v) * 180.0 / std::numbers::pi; }

double wrap_deg(double d) { return std::remainder(d, 360.0); }

const pf::CaseResult& find_case(const pf::SwitchingAction& a, const std::string& name) {
    for (const auto& c : a.cases)
        if (c.name == name) return c;
    throw pf::ValidationError("scenario has no case " + name);
}

char ph(pf::Phase p) { return pf::to_char(p); }

// Per-term deltas (ours − reference) for one case; returns the worst terminal magnitude and angle deltas.
std::pair<double, double> print_case_deltas(const char* label, const pf::CaseResult& c, const CaseRef& ref) {
    double worst_mag = 0.0, worst_ang = 0.0;
    for (std::size_t i = 0; i < c.phases.size(); ++i) {
        const auto& p = c.phases[i];
        const auto& r = ref[pf::index_of(p.phase)];
        const double d1m = std::abs(p.v_k1) - r.k1.mag, d1a = wrap_deg(deg(p.v_k1) - r.k1.deg);
        const double d2m = std::abs(p.v_k2) - r.k2.mag, d2a = wrap_deg(deg(p.v_k2) - r.k2.deg);
        worst_mag = std::max({worst_mag, std::abs(d1m), std::abs(d2m)});
        worst_ang = std::max({worst_ang, std::abs(d1a), std::abs(d2a)});
        detail("%s %c  V_k1 %.4f<%.4f (d %+.4f, %+.4f deg)  V_k2 %.4f<%.4f (d %+.4f, %+.4f deg)", label, ph(p.phase),
               std::abs(p.v_k1), deg(p.v_k1), d1m, d1a, std::abs(p.v_k2), deg(p.v_k2), d2m, d2a);
        detail("%s %c  dV %+.4f (d %+.4f)  dtheta %+.4f (d %+.4f)  S_post %.4f%+.4fj  S_est %.4f%+.4fj  ref %.4f%+.4fj",
               label, ph(p.phase), p.dmag, p.dmag - r.dmag, p.dangle_deg, p.dangle_deg - r.dangle, p.post_closure.real(),
               p.post_closure.imag(), p.closure_estimate.real(), p.closure_estimate.imag(), r.s.real(), r.s.imag());
    }
    return {worst_mag, worst_ang};
}

// ---- criteria ----

void criterion1() {
    pf::MonteCarloOptions o;
    o.dr_values = pf::grid_values(0.0, 0.15, 0.01);
    o.di_values = o.dr_values;
    o.per_cell = 100;
    o.seed = 42;
    const auto t0 = std::chrono::steady_clock::now();
    const auto records = pf::monte_carlo(pftest::ieee13_modified(), o);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    int failed = 0;
    for (const auto& r : records) failed += !r.converged;
    const pf::Envelope e1 = pf::envelope(records, kS1);
    const pf::Envelope e2 = pf::envelope(records, kS2);
    const bool ok = e1.eps_mag <= kMag1 && e1.eps_angle <= kAngle1 && e1.eps_power <= kPower1 && e2.eps_mag <= kMag2;
    verdict("C1", ok,
            strf("Monte Carlo envelopes: S<=%.1f mag %.4f/%.3f angle %.3f/%.2f deg power %.4f/%.2f; S<=%.1f mag %.4f/%.2f",
                kS1, e1.eps_mag, kMag1, e1.eps_angle, kAngle1, e1.eps_power, kPower1, kS2, e2.eps_mag, kMag2));
    detail("%zu records, %d not converged, %d with S<=%.1f, %d with S<=%.1f, %.1f s", records.size(), failed, e1.count,
           kS1, e2.count, kS2, secs);
    for (double s : {0.5, 0.6, 0.7, 0.8, 0.9}) {
        const pf::Envelope e = pf::envelope(records, s);
        detail("S<=%.1f: %5d records, mag %.4f angle %.3f deg power %.4f", s, e.count, e.eps_mag, e.eps_angle,
               e.eps_power);
    }
}

void criterion2(const pf::ScenarioReport& rep) {
    const auto& a = rep.actions.at(0);
    const auto& nc = find_case(a, "NC");
    const auto& mc = find_case(a, "MC");
    const auto& pc = find_case(a, "PC");
    const auto [nc_mag, nc_ang] = print_case_deltas("NC", nc, kDual13Nc);
    print_case_deltas("MC", mc, kDual13Mc);
    print_case_deltas("PC", pc, kDual13Pc);

    double pc_dmag = 0.0, pc_dang = 0.0, pc_flow = 0.0, ratio = 1e300;
    for (std::size_t i = 0; i < pc.phases.size(); ++i) {
        const auto& p = pc.phases[i];
        pc_dmag = std::max(pc_dmag, std::abs(p.dmag));
        pc_dang = std::max(pc_dang, std::abs(p.dangle_deg));
        pc_flow = std::max(pc_flow, std::abs(p.post_closure));
        ratio = std::min(ratio, std::abs(nc.phases[i].post_closure) / std::abs(p.post_closure));
    }
    double est_gap = 0.0;
    for (const auto& p : nc.phases) est_gap = std::max(est_gap, std::abs(p.closure_estimate - kDual13Nc[pf::index_of(p.phase)].s));
    const bool ok = nc_mag <= kNcMag && nc_ang <= kNcAngle && pc_dmag <= kPcDmag && pc_dang <= kPcDangle &&
                    pc_flow <= kPcFlow && ratio >= kPcRatio;
    detail("NC closure estimate vs reference line power: worst |delta| %.4f p.u.", est_gap);
    verdict("C2", ok,
            strf("IEEE-13 switching: NC terminals |d|V|| %.4f/%.3f |d angle| %.4f/%.1f deg; PC |dV| %.4f/%.3f "
                "|dtheta| %.4f/%.2f deg |S_post| %.5f/%.2f; NC/PC flow ratio %.0fx (>= %.0fx)",
                nc_mag, kNcMag, nc_ang, kNcAngle, pc_dmag, kPcDmag, pc_dang, kPcDangle, pc_flow, kPcFlow, ratio,
                kPcRatio));
}

struct DispatchDiag {
    double worst = 0.0;
    double mean_du = 0.0;
    double mean_dv = 0.0;
    bool signs_match = true;
};

DispatchDiag dispatch_deltas(const pf::ChannelMap& w) {
    DispatchDiag d;
    for (const auto& r : kDual13Dispatch) {
        const auto it = w.find({r.node, r.phase});
        const Complex got = it == w.end() ? Complex{} : it->second;
        const Complex delta = got - r.w;
        d.worst = std::max({d.worst, std::abs(delta.real()), std::abs(delta.imag())});
        d.mean_du += delta.real() / kDual13Dispatch.size();
        d.mean_dv += delta.imag() / kDual13Dispatch.size();
        const bool sign_ok = (got.real() > 0) == (r.w.real() > 0) && (got.imag() > 0) == (r.w.imag() > 0);
        d.signs_match = d.signs_match && sign_ok;
        detail("w %s.%c  %+.4f%+.4fj  ref %+.4f%+.4fj  d %+.4f%+.4fj%s", r.node, ph(r.phase), got.real(), got.imag(),
               r.w.real(), r.w.imag(), delta.real(), delta.imag(), sign_ok ? "" : "  SIGN");
    }
    return d;
}

void criterion3(const pf::ScenarioReport& rep, DispatchDiag& diag) {
    const auto& pc = find_case(rep.actions.at(0), "PC");
    diag = dispatch_deltas(pc.dispatch);
    bool opposite = true;
    for (const auto& [ch, w] : pc.dispatch) {
        const bool t1 = ch.node.front() == '1';
        if (t1 ? (w.real() <= 0 || w.imag() <= 0) : (w.real() >= 0 || w.imag() >= 0)) opposite = false;
    }
    const bool ok = diag.worst <= kDispatch && opposite && pc.dispatch.size() == 14;
    verdict("C3", ok,
            strf("IEEE-13 PC dispatch: worst channel delta %.4f/%.2f p.u. over %zu channels; T1 positive, T2 negative: %s",
                diag.worst, kDispatch, pc.dispatch.size(), opposite ? "yes" : "no"));
}

void criterion4(const pf::ScenarioReport& rep) {
    bool ok = rep.actions.size() == 2;
    std::string summary;
    const std::array<std::pair<const CaseRef*, const CaseRef*>, 2> refs{
        std::pair{&kDual37NcFirst, &kDual37PcFirst}, std::pair{&kDual37NcSecond, &kDual37PcSecond}};
    for (std::size_t k = 0; k < rep.actions.size() && k < 2; ++k) {
        const auto& a = rep.actions[k];
        print_case_deltas(k == 0 ? "1:NC" : "2:NC", find_case(a, "NC"), *refs[k].first);
        const auto& pc = find_case(a, "PC");
        print_case_deltas(k == 0 ? "1:PC" : "2:PC", pc, *refs[k].second);
        double dm = 0.0, da = 0.0, fl = 0.0;
        for (const auto& p : pc.phases) {
            dm = std::max(dm, std::abs(p.dmag));
            da = std::max(da, std::abs(p.dangle_deg));
            fl = std::max(fl, std::abs(p.post_closure));
        }
        ok = ok && dm <= kSeqDmag && da <= kSeqDangle && fl <= kSeqFlow;
        summary += strf("%s%s: |dV| %.5f |dtheta| %.4f deg |S_post| %.5f", k ? "; " : "", a.switch_id.c_str(), dm, da, fl);
    }
    verdict("C4", ok, strf("IEEE-37 sequential PC (limits %.3f, %.2f deg, %.3f): ", kSeqDmag, kSeqDangle, kSeqFlow) +
                          summary);
}

void criterion5(const pf::ScenarioReport& r13, const pf::ScenarioReport& r37) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::pair<std::string, bool>> checks;
    auto check = [&](const std::string& name, bool ok, const std::string& what) {
        checks.emplace_back(name, ok);
        detail("%-22s %s  %s", name.c_str(), ok ? "ok  " : "FAIL", what.c_str());
    };

    // zero-load flat profile
    {
        auto doc = pf::save_feeder(pftest::ieee37_modified());
        doc["loads"] = nlohmann::json::array();
        doc["caps"] = nlohmann::json::array();
        const pf::Network net = pf::load_feeder(doc);
        const pf::PhasorSolution ex = pf::solve_exact(net);
        const pf::LinearSolution lin = pf::solve_linear(net);
        const pf::PhaseIndex index(net);
        double worst = 0.0;
        for (int k = 0; k < index.node_phase_count(); ++k) {
            const Complex vs = net.slack_voltage()[pf::index_of(index.node_phase_at(k).phase)];
            worst = std::max({worst, std::abs(ex.V[k] - vs), std::abs(lin.E[k] - 1.0), std::abs(lin.Theta[k] - std::arg(vs))});
        }
        check("flat profile", worst <= kFlat, strf("worst deviation %.2e (<= %.0e)", worst, kFlat));
    }

    // exact angle identity on converged solutions
    {
        std::vector<pf::Network> nets{pftest::ieee13_modified(), pftest::ieee37_modified()};
        for (const char* f : {"ieee13_dual.json", "ieee37_dual.json"}) {
            pf::Network n = pftest::scenario_network(f);
            nets.push_back(n);
            for (const auto& id : n.open_switches()) {
                n = pf::close_switch(n, id);
                nets.push_back(n);
            }
        }
        for (unsigned s = 1; s <= 10; ++s) nets.push_back(pf::load_feeder(pftest::random_radial_doc(s, 15)));
        double worst = 0.0;
        for (const auto& n : nets) {
            const pf::PhasorSolution sol = pf::solve_exact(n);
            worst = std::max(worst, pf::angle_residual(n, sol).cwiseAbs().maxCoeff());
        }
        check("angle identity", worst <= kIdentity, strf("%zu networks, worst %.2e (<= %.0e)", nets.size(), worst, kIdentity));
    }

    // M/N against complex evaluation
    {
        std::mt19937_64 g(11);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        const std::array<const char*, 7> sets{"abc", "ab", "bc", "ac", "a", "b", "c"};
        double worst = 0.0;
        for (int t = 0; t < 1000; ++t) {
            const pf::PhaseSet phs = pf::PhaseSet::parse(sets[t % sets.size()]);
            Eigen::MatrixXcd Z(phs.size(), phs.size());
            for (int i = 0; i < Z.rows(); ++i)
                for (int j = 0; j < Z.cols(); ++j) Z(i, j) = Complex(u(g), u(g));
            const pf::MnPair a = pf::build_mn(Z, phs), b = pftest::mn_reference(Z, phs);
            worst = std::max({worst, (a.M - b.M).cwiseAbs().maxCoeff(), (a.N - b.N).cwiseAbs().maxCoeff()});
        }
        check("M/N evaluation", worst <= kMn, strf("1000 matrices, worst %.2e (<= %.0e)", worst, kMn));
    }

    // radial sweep vs direct solve
    {
        double worst = 0.0;
        auto gap = [&](const pf::Network& n, const pf::ChannelMap& w) {
            const pf::LinearSolution a = pf::solve_linear(n, w), b = pftest::radial_sweep(n, w);
            worst = std::max({worst, (a.E - b.E).cwiseAbs().maxCoeff(), (a.Theta - b.Theta).cwiseAbs().maxCoeff(),
                              (a.P - b.P).cwiseAbs().maxCoeff(), (a.Q - b.Q).cwiseAbs().maxCoeff()});
        };
        for (unsigned s = 1; s <= 20; ++s) gap(pf::load_feeder(pftest::random_radial_doc(s, 15)), {});
        gap(pftest::ieee13_modified(), {});
        gap(pftest::ieee37_modified(), {});
        gap(pftest::scenario_network("ieee13_dual.json"), find_case(r13.actions.at(0), "PC").dispatch);
        check("radial sweep", worst <= kSweep, strf("23 networks, worst %.2e (<= %.0e)", worst, kSweep));
    }

    // OPF oracle and weight scaling
    {
        auto doc = pf::save_feeder(pftest::scenario_network("ieee13_dual.json"));
        doc["der"] = nlohmann::json::array();
        for (const char* node : {"1675", "2671"})
            for (const char* p : {"a", "b", "c"}) doc["der"].push_back({{"node", node}, {"phase", p}, {"capacity", 0.05}});
        const pf::Network net = pf::load_feeder(doc);
        double worst = 0.0;
        bool bounds_inactive = true;
        for (const pf::OpfWeights w : {pf::OpfWeights{1000, 1000, 1}, pf::OpfWeights{1000, 0, 1}, pf::OpfWeights{10, 50, 1}}) {
            const pf::OpfProblem prob = pf::build_opf(net, {{"1680", "2680"}}, w);
            const pf::Dispatch d = pf::solve_opf(prob);
            const pftest::ReferenceOpf ref = pftest::projected_gradient(prob);
            bounds_inactive = bounds_inactive && ref.min_e > prob.bounds.e_min && ref.max_e < prob.bounds.e_max;
            worst = std::max(worst, std::abs(d.terms.objective - ref.objective) / ref.objective);
        }
        check("OPF oracle", worst <= kOracle && bounds_inactive,
              strf("6 channels, 3 weightings, worst relative objective gap %.2e (<= %.0e)", worst, kOracle));

        const pf::Network& dual = pftest::scenario_network("ieee13_dual.json");
        const pf::Dispatch a = pf::solve_opf(pf::build_opf(dual, {{"1680", "2680"}}, {1000, 1000, 1}));
        const pf::Dispatch b = pf::solve_opf(pf::build_opf(dual, {{"1680", "2680"}}, {7000, 7000, 7}));
        double gap = 0.0;
        for (const auto& [ch, w] : a.w) gap = std::max(gap, std::abs(w - b.w.at(ch)));
        check("weight scaling", gap <= kScaling, strf("x7 weights, worst channel gap %.2e (<= %.0e)", gap, kScaling));
    }

    // KKT on shipped scenarios
    {
        double worst = 0.0;
        bool all = true;
        int n = 0;
        for (const auto* rep : {&r13, &r37}) {
            for (const auto& a : rep->actions) {
                for (const auto& c : a.cases) {
                    if (!c.kkt) continue;
                    ++n;
                    worst = std::max({worst, c.kkt->stationarity, c.kkt->complementarity});
                    all = all && c.kkt->pass();
                }
            }
        }
        check("KKT", all && worst <= kKkt, strf("%d solves, worst residual %.2e (<= %.0e)", n, worst, kKkt));
    }

    // Monte Carlo determinism
    {
        pf::MonteCarloOptions o;
        o.dr_values = {0.02, 0.08};
        o.di_values = {0.03, 0.07};
        o.per_cell = 5;
        o.workers = 1;
        const auto x = pf::monte_carlo(pftest::ieee13_modified(), o);
        o.workers = 3;
        const auto y = pf::monte_carlo(pftest::ieee13_modified(), o);
        bool same = x.size() == y.size();
        for (std::size_t i = 0; same && i < x.size(); ++i)
            same = x[i].eps_mag == y[i].eps_mag && x[i].eps_angle == y[i].eps_angle && x[i].eps_power == y[i].eps_power &&
                   x[i].substation_power == y[i].substation_power;
        check("MC determinism", same, strf("%zu records, 1 vs 3 workers", x.size()));
    }

    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    int passed = 0;
    for (const auto& [name, ok] : checks) passed += ok;
    const bool ok = passed == static_cast<int>(checks.size()) && secs < kSuiteSeconds;
    verdict("C5", ok, strf("property suite: %d/%zu checks, %.1f s (< %.0f s)", passed, checks.size(), secs, kSuiteSeconds));
}

void criterion6(const DispatchDiag& diag) {
    const bool offset = std::abs(diag.mean_du) > kOffset || std::abs(diag.mean_dv) > kOffset;
    verdict("C6", diag.signs_match && !offset,
            strf("sign/offset diagnostics: dispatch signs %s, mean delta u %+.4f v %+.4f (|.| <= %.3f); per-term deltas "
                "listed under C2-C4",
                diag.signs_match ? "agree" : "DISAGREE", diag.mean_du, diag.mean_dv, kOffset));
}

}  // namespace

int main() {
    try {
        const pf::ScenarioReport r13 = pf::run_scenario(pf::load_scenario_file(pftest::data_file("ieee13_dual.json")));
        const pf::ScenarioReport r37 = pf::run_scenario(pf::load_scenario_file(pftest::data_file("ieee37_dual.json")));
        DispatchDiag diag;
        criterion1();
        criterion2(r13);
        criterion3(r13, diag);
        criterion4(r37);
        criterion5(r13, r37);
        criterion6(diag);
    } catch (const std::exception& e) {
        std::printf("acceptance aborted: %s\n", e.what());
        return 2;
    }
    if (g_failed.empty()) {
        std::printf("all criteria passed\n");
        return 0;
    }
    std::printf("failed:");
    for (const auto& id : g_failed) std::printf(" %s", id.c_str());
    std::printf("\n");
    return 1;
}
