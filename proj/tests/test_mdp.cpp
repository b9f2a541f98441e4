#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "homomdp/errors.hpp"
#include "homomdp/mdp.hpp"
#include "homomdp/run_record.hpp"
#include "support/oracles.hpp"

using namespace homomdp;

namespace {

GroundMdp one_state(double r, double gamma) {
    return GroundMdp(MatrixXd::Ones(1, 1), MatrixXd::Constant(1, 1, r), gamma);
}

}  // namespace

TEST(GroundMdp, RejectsBadInputs) {
    MatrixXd p(2, 2);
    p << 0.5, 0.5, 0.2, 0.8;
    MatrixXd r = MatrixXd::Zero(2, 1);
    EXPECT_NO_THROW(GroundMdp(p, r, 0.9));
    EXPECT_THROW(GroundMdp(p, r, 1.0), InvalidModel);
    EXPECT_THROW(GroundMdp(p, r, -0.1), InvalidModel);
    MatrixXd bad = p;
    bad(0, 0) = 0.6;
    EXPECT_THROW(GroundMdp(bad, r, 0.9), InvalidModel);
    bad = p;
    bad(1, 0) = -0.2;
    bad(1, 1) = 1.2;
    EXPECT_THROW(GroundMdp(bad, r, 0.9), InvalidModel);
    MatrixXd rn = r;
    rn(0, 0) = std::numeric_limits<double>::infinity();
    EXPECT_THROW(GroundMdp(p, rn, 0.9), InvalidModel);
    EXPECT_THROW(GroundMdp(p, MatrixXd::Zero(2, 2), 0.9), DimensionError);
}

TEST(InduceChain, OneStateChain) {
    const MarkovChain c = induce_chain(one_state(1.0, 0.9), PolicyMatrix::uniform(1, 1));
    EXPECT_DOUBLE_EQ(c.transition()(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(c.reward()(0), 1.0);
}

TEST(InduceChain, UniformPolicyMixesRows) {
    MatrixXd p(4, 2);
    p << 1, 0,
         0, 1,
         1, 0,
         0, 1;
    const GroundMdp mdp(p, MatrixXd::Zero(2, 2), 0.9);
    const MarkovChain c = induce_chain(mdp, PolicyMatrix::uniform(2, 2));
    EXPECT_DOUBLE_EQ(c.transition()(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(c.transition()(0, 1), 0.5);
}

TEST(InduceChain, MatchesDoubleLoop) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const GroundMdp mdp = oracle::random_mdp(rng, 5, 3, 0.9);
        const MatrixXd pi = oracle::random_policy(rng, 5, 3);
        const MarkovChain c = induce_chain(mdp, PolicyMatrix(pi));
        EXPECT_LE((c.transition() - oracle::chain_double_loop(mdp, pi)).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_LE((c.reward() - oracle::reward_double_loop(mdp, pi)).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(InduceChain, LinearInPolicy) {
    std::mt19937_64 rng(8);
    const GroundMdp mdp = oracle::random_mdp(rng, 6, 3, 0.9);
    const MatrixXd p1 = oracle::random_policy(rng, 6, 3);
    const MatrixXd p2 = oracle::random_policy(rng, 6, 3);
    for (double lambda : {0.0, 0.3, 0.75, 1.0}) {
        const MatrixXd mix = lambda * p1 + (1 - lambda) * p2;
        const MatrixXd lhs = induce_chain(mdp, PolicyMatrix(mix)).transition();
        const MatrixXd rhs = lambda * induce_chain(mdp, PolicyMatrix(p1)).transition() +
                             (1 - lambda) * induce_chain(mdp, PolicyMatrix(p2)).transition();
        EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(InduceChain, ShapeMismatch) {
    std::mt19937_64 rng(9);
    const GroundMdp mdp = oracle::random_mdp(rng, 3, 2, 0.9);
    EXPECT_THROW(induce_chain(mdp, PolicyMatrix::uniform(3, 3)), DimensionError);
}

TEST(ExactValue, HandSolved) {
    const MarkovChain c1(MatrixXd::Ones(1, 1), VectorXd::Ones(1), 0.9);
    EXPECT_NEAR(exact_value(c1).values(0), 10.0, 1e-12);

    MatrixXd p(2, 2);
    p << 0, 1, 1, 0;
    VectorXd r(2);
    r << 1, 0;
    const VectorXd v = exact_value(MarkovChain(p, r, 0.5)).values;
    EXPECT_NEAR(v(0), 4.0 / 3.0, 1e-12);
    EXPECT_NEAR(v(1), 2.0 / 3.0, 1e-12);
}

TEST(ExactValue, MatchesValueIteration) {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 5; ++trial) {
        const MatrixXd p = oracle::random_stochastic(rng, 8, 8);
        VectorXd r = VectorXd::Random(8);
        const MarkovChain c(p, r, 0.9);
        const VectorXd v = exact_value(c).values;
        const VectorXd vi = oracle::value_iteration(p, r, 0.9, 100000);
        EXPECT_LE((v - vi).cwiseAbs().maxCoeff(), 1e-8);
        EXPECT_LE(bellman_residual(c, v), 1e-9);
    }
}

TEST(QValues, Examples) {
    std::mt19937_64 rng(11);
    const GroundMdp myopic = oracle::random_mdp(rng, 4, 3, 0.0);
    const MatrixXd q0 = q_values(myopic, ValueVector{VectorXd::Random(4)});
    EXPECT_LE((q0 - myopic.rewards()).cwiseAbs().maxCoeff(), 0.0);

    const MatrixXd q1 = q_values(one_state(1.0, 0.9), ValueVector{VectorXd::Constant(1, 10.0)});
    EXPECT_NEAR(q1(0, 0), 10.0, 1e-12);

    const GroundMdp mdp = oracle::random_mdp(rng, 5, 3, 0.8);
    const VectorXd v = VectorXd::Random(5);
    const MatrixXd q = q_values(mdp, ValueVector{v});
    for (int s = 0; s < 5; ++s)
        for (int a = 0; a < 3; ++a) {
            double acc = mdp.rewards()(s, a);
            for (int t = 0; t < 5; ++t) acc += 0.8 * mdp.stacked()(s * 3 + a, t) * v(t);
            EXPECT_NEAR(q(s, a), acc, 1e-12);
        }
    EXPECT_THROW(q_values(mdp, ValueVector{VectorXd::Zero(4)}), DimensionError);
}

TEST(Performance, Examples) {
    VectorXd v(2);
    v << 3, 7;
    EXPECT_DOUBLE_EQ(performance(InitialDistribution::point(2, 0), ValueVector{v}), 3.0);
    v << 4.0 / 3.0, 2.0 / 3.0;
    EXPECT_NEAR(performance(InitialDistribution::uniform(2), ValueVector{v}), 1.0, 1e-15);

    std::mt19937_64 rng(12);
    const MatrixXd xi = oracle::random_stochastic(rng, 1, 6);
    const VectorXd w = VectorXd::Random(6);
    double acc = 0.0;
    for (int i = 0; i < 6; ++i) acc += xi(0, i) * w(i);
    EXPECT_NEAR(performance(InitialDistribution(xi.row(0).transpose()), ValueVector{w}), acc, 1e-14);
    EXPECT_THROW(performance(InitialDistribution::uniform(3), ValueVector{w}), DimensionError);
}

TEST(PolicyIteration, OneState) {
    const auto res = policy_iteration(one_state(2.0, 0.5));
    EXPECT_TRUE(res.converged);
    EXPECT_EQ(res.iterations, 1);
    EXPECT_NEAR(res.value.values(0), 4.0, 1e-12);
}

TEST(PolicyIteration, DominatingAction) {
    MatrixXd p(4, 2);
    p << 0.5, 0.5,
         0.5, 0.5,
         0.5, 0.5,
         0.5, 0.5;
    MatrixXd r(2, 2);
    r << 0.0, 1.0,
         0.0, 1.0;
    const auto res = policy_iteration(GroundMdp(p, r, 0.9));
    EXPECT_TRUE(res.converged);
    EXPECT_EQ(res.policy.greedy_actions(), (std::vector<int>{1, 1}));
    EXPECT_NEAR(res.value.values(0), 10.0, 1e-10);
    EXPECT_NEAR(res.value.values(1), 10.0, 1e-10);
}

TEST(PolicyIteration, MatchesExhaustiveSearch) {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 5; ++trial) {
        const GroundMdp mdp = oracle::random_mdp(rng, 6, 3, 0.9);
        VectorXd best = VectorXd::Constant(6, -1e300);
        oracle::for_each_deterministic(6, 3, [&](const std::vector<int>& act) {
            best = best.cwiseMax(oracle::deterministic_value(mdp, act));
        });
        const auto res = policy_iteration(mdp);
        EXPECT_TRUE(res.converged);
        EXPECT_LE((res.value.values - best).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(PolicyIteration, MonotoneImprovementAndRecord) {
    std::mt19937_64 rng(14);
    const GroundMdp mdp = oracle::random_mdp(rng, 15, 4, 0.95);
    const auto res = policy_iteration(mdp);
    ASSERT_GE(res.record.size(), 1u);
    EXPECT_EQ(res.record.rows().front().iter, 0);
    for (std::size_t i = 1; i < res.record.size(); ++i)
        EXPECT_GE(res.record.rows()[i].j_s, res.record.rows()[i - 1].j_s - 1e-10);
}

TEST(PolicyIteration, NonConvergenceFlagged) {
    std::mt19937_64 rng(15);
    const GroundMdp mdp = oracle::random_mdp(rng, 30, 5, 0.99);
    const auto res = policy_iteration(mdp, 1);
    EXPECT_FALSE(res.converged);
    EXPECT_EQ(res.iterations, 1);
}

TEST(PolicyMatrix, Constructors) {
    EXPECT_THROW(PolicyMatrix::deterministic({0, 3}, 3), DimensionError);
    const PolicyMatrix p = PolicyMatrix::deterministic({2, 0}, 3);
    EXPECT_EQ(p.greedy_actions(), (std::vector<int>{2, 0}));
    MatrixXd bad(1, 2);
    bad << 0.7, 0.7;
    EXPECT_THROW(PolicyMatrix{bad}, InvalidModel);
}

TEST(RunRecord, CsvRoundTrip) {
    RunRecord rec;
    rec.append({0, 0.0, 1.5, 1.25, 1.0, 0.1, 0.0, 1e-17});
    rec.append({10, 0.5, 2.0, 1.75, 1.5, 0.01, 0.02, 0.0});
    const std::string csv = rec.to_csv();
    EXPECT_EQ(csv.substr(0, csv.find('\n')), RunRecord::kCsvHeader);
    std::istringstream in(csv);
    const RunRecord back = RunRecord::read_csv(in);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back.rows()[1].iter, 10);
    EXPECT_EQ(back.rows()[0].span_residual, 1e-17);
    EXPECT_EQ(back.rows()[1].j_u, 1.75);
}

TEST(RunRecord, EnforcesOrdering) {
    RunRecord rec;
    rec.append({1, 0.5, 0, 0, 0, 0, 0, 0});
    EXPECT_THROW(rec.append({1, 0.6, 0, 0, 0, 0, 0, 0}), std::invalid_argument);
    EXPECT_THROW(rec.append({2, 0.4, 0, 0, 0, 0, 0, 0}), std::invalid_argument);
}

TEST(RunRecord, RejectsWrongHeader) {
    std::istringstream in("iter,foo\n1,2\n");
    EXPECT_ANY_THROW(RunRecord::read_csv(in));
}
