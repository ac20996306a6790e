#include <gtest/gtest.h>

#include <cmath>

#include "phasorflow/errors.hpp"
#include "phasorflow/experiments.hpp"
#include "phasorflow/opf.hpp"
#include "test_support.hpp"

namespace pf = phasorflow;
using pf::Complex;

namespace {

const std::vector<pf::TargetPair> kTargets{{"1680", "2680"}};
constexpr pf::OpfWeights kPc{1000.0, 1000.0, 1.0};
constexpr pf::OpfWeights kMc{1000.0, 0.0, 1.0};

const pf::Network& dual13() {
    static const pf::Network net = pftest::scenario_network("ieee13_dual.json");
    return net;
}

pf::Network with_der(const pf::Network& net, const std::vector<std::pair<std::string, std::string>>& channels) {
    auto doc = pf::save_feeder(net);
    doc["der"] = nlohmann::json::array();
    for (const auto& [node, phase] : channels) doc["der"].push_back({{"node", node}, {"phase", phase}, {"capacity", 0.05}});
    return pf::load_feeder(doc);
}

double max_channel_gap(const pf::ChannelMap& a, const pf::ChannelMap& b) {
    double gap = 0.0;
    for (const auto& [ch, w] : a) gap = std::max(gap, std::abs(w - b.at(ch)));
    return gap;
}

}  // namespace

TEST(BuildOpf, DualFeederHasFourteenDerChannels) {
    const pf::OpfProblem prob = pf::build_opf(dual13(), kTargets, kPc);
    EXPECT_EQ(prob.channels.size(), 14u);
    EXPECT_EQ(prob.target_node_phases.size(), 3u);
    int at_1684 = 0;
    for (const auto& c : prob.channels) at_1684 += c.node == "1684";
    EXPECT_EQ(at_1684, 2);
}

TEST(BuildOpf, VvcContributesHalfSlopeOnE) {
    auto doc = pf::save_feeder(dual13());
    doc["vvc"] = nlohmann::json::array();
    const pf::Network plain = pf::load_feeder(doc);
    const pf::LinearModel with = pf::assemble(dual13());
    const pf::LinearModel without = pf::assemble(plain);
    const pf::PhaseIndex index(dual13());
    const int k = index.node_phase(dual13().node_index("1632"), pf::Phase::a);
    const double dcoef = with.A.coeff(with.reactive_row(k), with.E(k)) - without.A.coeff(without.reactive_row(k), without.E(k));
    // slope (0.05 − (−0.05)) / (1.05 − 0.95) = 1, entering through (1 + E)/2
    EXPECT_NEAR(dcoef, -0.5, 1e-15);
    const double db = with.b[with.reactive_row(k)] - without.b[without.reactive_row(k)];
    EXPECT_NEAR(db, 1.0 * (0.5 - 0.95) - 0.05, 1e-15);
}

TEST(BuildOpf, RejectsBadInput) {
    EXPECT_THROW(pf::build_opf(dual13(), kTargets, {0.0, 0.0, 0.0}), pf::ValidationError);
    EXPECT_THROW(pf::build_opf(dual13(), kTargets, {-1.0, 1.0, 1.0}), pf::ValidationError);
    EXPECT_THROW(pf::build_opf(dual13(), {{"1680", "9999"}}, kPc), pf::ValidationError);
    EXPECT_THROW(pf::build_opf(dual13(), {{"1611", "2652"}}, kPc), pf::ValidationError);
    EXPECT_THROW(pf::build_opf(dual13(), kTargets, kPc, {1.1, 1.0}), pf::ValidationError);
}

TEST(SolveOpf, NoDerGivesUncontrolledSolution) {
    auto doc = pf::save_feeder(dual13());
    doc["der"] = nlohmann::json::array();
    const pf::Network net = pf::load_feeder(doc);
    const pf::OpfProblem prob = pf::build_opf(net, kTargets, kPc);
    const pf::Dispatch d = pf::solve_opf(prob);
    for (const auto& [ch, w] : d.w) EXPECT_EQ(w, Complex(0.0, 0.0));
    const pf::LinearSolution lin = pf::solve_linear(net);
    const pf::LinearSolution with = pf::solve_linear(net, d.w);
    EXPECT_TRUE(lin.E == with.E);
    const pf::OpfTerms t = pf::evaluate_objective(prob, {});
    EXPECT_NEAR(d.terms.objective, t.objective, 1e-12 * std::max(1.0, t.objective));
}

TEST(SolveOpf, EffortOnlyWeightsGiveZeroDispatch) {
    const pf::OpfProblem prob = pf::build_opf(dual13(), kTargets, {0.0, 0.0, 1.0});
    const pf::Dispatch d = pf::solve_opf(prob);
    for (const auto& [ch, w] : d.w) EXPECT_EQ(w, Complex(0.0, 0.0));
    EXPECT_TRUE(pf::kkt_check(prob, d).pass());
}

TEST(SolveOpf, WeightScalingLeavesArgminUnchanged) {
    const pf::Dispatch a = pf::solve_opf(pf::build_opf(dual13(), kTargets, kPc));
    const pf::Dispatch b = pf::solve_opf(pf::build_opf(dual13(), kTargets, {10000.0, 10000.0, 10.0}));
    EXPECT_LE(max_channel_gap(a.w, b.w), 1e-6);
    EXPECT_NEAR(b.terms.objective, 10.0 * a.terms.objective, 1e-6 * b.terms.objective);
}

TEST(SolveOpf, SymmetricFeedersNeedNoDispatch) {
    auto j = pf::read_json_file(pftest::data_file("ieee13_dual.json"));
    for (auto& f : j["feeders"]) f["extra"][0]["factor"] = 1.0;
    const pf::Network net = pf::build_scenario_network(pf::parse_scenario(j, pftest::data_dir()));
    const pf::OpfProblem prob = pf::build_opf(net, kTargets, kPc);
    const pf::Dispatch d = pf::solve_opf(prob);
    EXPECT_LE(d.terms.C_E, 1e-12);
    EXPECT_LE(d.terms.C_theta, 1e-12);
    for (const auto& [ch, w] : d.w) EXPECT_LE(std::abs(w), 1e-6);
}

TEST(SolveOpf, DiskConstraintsAndActiveSet) {
    const pf::OpfProblem prob = pf::build_opf(dual13(), kTargets, kPc);
    const pf::Dispatch d = pf::solve_opf(prob);
    ASSERT_EQ(d.y_w.size(), 2 * static_cast<long>(prob.channels.size()));
    for (std::size_t g = 0; g < prob.channels.size(); ++g) {
        const auto& c = prob.channels[g];
        const double r = std::abs(d.w.at({c.node, c.phase}));
        const double y = std::hypot(d.y_w[2 * g], d.y_w[2 * g + 1]);
        EXPECT_LE(r, c.capacity + 1e-8);
        if (y > 1e-6) EXPECT_NEAR(r, c.capacity, 1e-8) << c.node;
        if (r < c.capacity - 1e-8) EXPECT_LE(y, 1e-6) << c.node;
    }
}

TEST(SolveOpf, MatchesProjectedGradientOracle) {
    const pf::Network net = with_der(dual13(), {{"1675", "a"}, {"1675", "b"}, {"1675", "c"},
                                                {"2671", "a"}, {"2671", "b"}, {"2671", "c"}});
    for (const pf::OpfWeights w : {kPc, kMc, pf::OpfWeights{10.0, 50.0, 1.0}}) {
        const pf::OpfProblem prob = pf::build_opf(net, kTargets, w);
        ASSERT_LE(prob.channels.size(), 6u);
        const pf::Dispatch d = pf::solve_opf(prob);
        const pftest::ReferenceOpf ref = pftest::projected_gradient(prob);
        // E bounds stay inactive in the oracle's solution, so both solve the same problem.
        ASSERT_GT(ref.min_e, prob.bounds.e_min);
        ASSERT_LT(ref.max_e, prob.bounds.e_max);
        EXPECT_NEAR(d.terms.objective, ref.objective, 1e-6 * ref.objective) << w.rho_e << " " << w.rho_theta;
    }
}

TEST(SolveOpf, InfeasibleBoundsGiveCertificate) {
    const pf::OpfProblem prob = pf::build_opf(dual13(), kTargets, kPc, {0.999, 1.0});
    try {
        (void)pf::solve_opf(prob);
        FAIL() << "expected InfeasibleError";
    } catch (const pf::InfeasibleError& e) {
        EXPECT_FALSE(e.violated_constraints().empty());
    }
}

TEST(SolveOpf, RejectsLooseTolerances) {
    const pf::OpfProblem prob = pf::build_opf(dual13(), kTargets, kPc);
    pf::AdmmSettings s;
    s.eps_abs = 1e-3;
    EXPECT_THROW(pf::solve_opf(prob, s), pf::ValidationError);
}

TEST(KktCheck, PassesOnSolutionAndFailsWhenPerturbed) {
    for (const pf::OpfWeights w : {kMc, kPc}) {
        const pf::OpfProblem prob = pf::build_opf(dual13(), kTargets, w);
        pf::Dispatch d = pf::solve_opf(prob);
        const pf::KktReport ok = pf::kkt_check(prob, d);
        EXPECT_TRUE(ok.pass()) << ok.stationarity << " " << ok.complementarity;
        d.w.begin()->second += Complex(0.01, 0.0);
        EXPECT_FALSE(pf::kkt_check(prob, d).stationarity_ok);
    }
}

TEST(KktCheck, ShippedScenariosPass) {
    for (const char* f : {"ieee13_dual.json", "ieee37_dual.json"}) {
        const pf::ScenarioReport rep = pf::run_scenario(pf::load_scenario_file(pftest::data_file(f)));
        for (const auto& a : rep.actions) {
            for (const auto& c : a.cases) {
                if (!c.kkt) continue;
                EXPECT_TRUE(c.kkt->pass()) << f << " " << a.switch_id << " " << c.name << " stationarity "
                                           << c.kkt->stationarity;
            }
        }
    }
}

TEST(SolveOpf, Deterministic) {
    const pf::OpfProblem prob = pf::build_opf(dual13(), kTargets, kPc);
    const pf::Dispatch a = pf::solve_opf(prob);
    const pf::Dispatch b = pf::solve_opf(prob);
    EXPECT_TRUE(a.w == b.w);
    EXPECT_EQ(a.stats.iterations, b.stats.iterations);
}
