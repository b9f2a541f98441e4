#include <gtest/gtest.h>

#include "homomdp/environments.hpp"
#include "homomdp/errors.hpp"

using namespace homomdp;

namespace {

double max_row_sum_error(const GroundMdp& mdp) {
    return (mdp.stacked().rowwise().sum().array() - 1.0).abs().maxCoeff();
}

}  // namespace

TEST(RandomMdp, DensityControlsSupport) {
    const GroundMdp dense = gen_random_mdp(12, 3, 1.0, 0.9, 1);
    EXPECT_GT(dense.stacked().minCoeff(), 0.0);

    const GroundMdp sparse = gen_random_mdp(100, 2, 0.1, 0.9, 2);
    for (Eigen::Index i = 0; i < sparse.stacked().rows(); ++i)
        EXPECT_EQ((sparse.stacked().row(i).array() > 0.0).count(), 10);
    EXPECT_LE(max_row_sum_error(sparse), 1e-12);
    EXPECT_GE(sparse.rewards().minCoeff(), 0.0);
    EXPECT_LE(sparse.rewards().maxCoeff(), 1.0);
}

TEST(RandomMdp, Deterministic) {
    const GroundMdp a = gen_random_mdp(30, 4, 0.5, 0.9, 77);
    const GroundMdp b = gen_random_mdp(30, 4, 0.5, 0.9, 77);
    const GroundMdp c = gen_random_mdp(30, 4, 0.5, 0.9, 78);
    EXPECT_TRUE(a.stacked() == b.stacked());
    EXPECT_TRUE(a.rewards() == b.rewards());
    EXPECT_FALSE(a.stacked() == c.stacked());
}

TEST(RandomMdp, InvalidDensity) {
    EXPECT_THROW(gen_random_mdp(10, 2, 0.0, 0.9, 0), InvalidModel);
    EXPECT_THROW(gen_random_mdp(10, 2, 1.5, 0.9, 0), InvalidModel);
    EXPECT_THROW(gen_random_mdp(10, 2, 0.05, 0.9, 0), InvalidModel);
}

TEST(WeaklyCoupled, ZeroCouplingIsBlockDiagonal) {
    const GroundMdp mdp = gen_weakly_coupled(3, 4, 2, 0.0, 0.9, 5);
    for (int s = 0; s < 12; ++s)
        for (int a = 0; a < 2; ++a)
            for (int t = 0; t < 12; ++t)
                if (s / 4 != t / 4) {
                    EXPECT_EQ(mdp.stacked()(mdp.row_index(s, a), t), 0.0);
                }
}

TEST(WeaklyCoupled, OutOfBlockMass) {
    const double inter = 0.15;
    const GroundMdp mdp = gen_weakly_coupled(2, 3, 2, inter, 0.9, 6);
    for (int s = 0; s < 6; ++s)
        for (int a = 0; a < 2; ++a) {
            double out = 0.0;
            for (int t = 0; t < 6; ++t)
                if (s / 3 != t / 3) out += mdp.stacked()(mdp.row_index(s, a), t);
            EXPECT_NEAR(out, inter, 1e-12);
        }
    EXPECT_LE(max_row_sum_error(mdp), 1e-12);
}

TEST(WeaklyCoupled, DeterministicAndValidated) {
    EXPECT_TRUE(gen_weakly_coupled(4, 5, 3, 0.1, 0.9, 9).stacked() ==
                gen_weakly_coupled(4, 5, 3, 0.1, 0.9, 9).stacked());
    EXPECT_THROW(gen_weakly_coupled(2, 3, 2, 0.5, 0.9, 0), InvalidModel);
    EXPECT_THROW(gen_weakly_coupled(0, 3, 2, 0.1, 0.9, 0), DimensionError);
    EXPECT_THROW(gen_weakly_coupled(1, 3, 2, 0.1, 0.9, 0), InvalidModel);
}

TEST(FourRoom, WallsAndMoves) {
    const FourRoom fr = gen_four_room(11, 0.9);
    EXPECT_EQ(fr.mdp.n_states(), 104);
    EXPECT_EQ(fr.mdp.n_actions(), 4);
    EXPECT_EQ(fr.cells[fr.start], std::make_pair(0, 0));
    EXPECT_EQ(fr.cells[fr.goal], std::make_pair(10, 10));
    // Start cell: North runs into the boundary, East is open.
    EXPECT_DOUBLE_EQ(fr.mdp.stacked()(fr.mdp.row_index(fr.start, North), fr.start), 1.0);
    EXPECT_DOUBLE_EQ(fr.mdp.stacked()(fr.mdp.row_index(fr.start, East), fr.start), 0.2);
    EXPECT_DOUBLE_EQ(fr.mdp.stacked()(fr.mdp.row_index(fr.start, East), fr.start + 1), 0.8);
    // Cell (0, 4) lies next to the wall column 5 (no doorway in row 0).
    int s04 = -1;
    for (int s = 0; s < fr.mdp.n_states(); ++s)
        if (fr.cells[s] == std::make_pair(0, 4)) s04 = s;
    ASSERT_GE(s04, 0);
    EXPECT_DOUBLE_EQ(fr.mdp.stacked()(fr.mdp.row_index(s04, East), s04), 1.0);
    // Goal resets to start with reward 1.
    for (int a = 0; a < 4; ++a) {
        EXPECT_DOUBLE_EQ(fr.mdp.stacked()(fr.mdp.row_index(fr.goal, a), fr.start), 1.0);
        EXPECT_DOUBLE_EQ(fr.mdp.reward(fr.goal, a), 1.0);
    }
    EXPECT_DOUBLE_EQ(fr.mdp.rewards().sum(), 4.0);
}

TEST(FourRoom, GoalReachableFromEveryCell) {
    for (const auto& [side, thin] : {std::pair{5, false}, std::pair{11, false}, std::pair{10, true},
                                     std::pair{13, true}}) {
        const FourRoom fr = gen_four_room(side, 0.9, 0, thin);
        const std::vector<bool> reach = can_reach(fr.mdp, fr.goal);
        for (int s = 0; s < fr.mdp.n_states(); ++s) EXPECT_TRUE(reach[s]) << side << " " << s;
    }
}

TEST(FourRoom, ThinWallsSizes) {
    EXPECT_EQ(gen_four_room(10, 0.9, 0, true).mdp.n_states(), 100);
    EXPECT_EQ(four_room_states(80, true), 6400);
    // The thin wall between columns 4 and 5 blocks row 0.
    const FourRoom fr = gen_four_room(10, 0.9, 0, true);
    EXPECT_DOUBLE_EQ(fr.mdp.stacked()(fr.mdp.row_index(4, East), 4), 1.0);
}

TEST(FourRoom, InvalidSide) {
    EXPECT_THROW(gen_four_room(4, 0.9), InvalidModel);
    EXPECT_THROW(gen_four_room(10, 0.9), InvalidModel);
    EXPECT_THROW(gen_four_room(3, 0.9, 0, true), InvalidModel);
}

TEST(TandemQueue, MassAccounting) {
    TandemQueueParams p;
    p.joint_actions = true;
    const GroundMdp mdp = gen_tandem_queue(p, 0.9);
    EXPECT_EQ(mdp.n_states(), 100);
    EXPECT_EQ(mdp.n_actions(), 9);
    EXPECT_LE(max_row_sum_error(mdp), 1e-12);
    EXPECT_GE(mdp.rewards().minCoeff(), 0.0);
    EXPECT_LE(mdp.rewards().maxCoeff(), 1.0);
    p.joint_actions = false;
    EXPECT_EQ(gen_tandem_queue(p, 0.9).n_actions(), 3);
}

TEST(TandemQueue, ZeroArrivalsAbsorbAtEmpty) {
    TandemQueueParams p;
    p.arrival_rate = 0.0;
    const GroundMdp mdp = gen_tandem_queue(p, 0.9);
    for (int k1 = 1; k1 <= p.max_servers; ++k1)
        for (int k2 = 1; k2 <= p.max_servers; ++k2)
            for (int a = 0; a < mdp.n_actions(); ++a) {
                const auto row = mdp.stacked().row(mdp.row_index(tandem_index(p, 0, 0, k1, k2), a));
                double empty_mass = 0.0;
                for (int j1 = 1; j1 <= p.max_servers; ++j1)
                    for (int j2 = 1; j2 <= p.max_servers; ++j2)
                        empty_mass += row(tandem_index(p, 0, 0, j1, j2));
                EXPECT_NEAR(empty_mass, 1.0, 1e-15);
            }
}

TEST(TandemQueue, LargeConfiguration) {
    const TandemQueueParams p{12, 12, 6, 0.6, 0.3, 0.3, 1.0, 0.5, false};
    EXPECT_EQ(tandem_states(p), 6084);
}

TEST(TandemQueue, InvalidParameters) {
    TandemQueueParams p;
    p.service1 = 1.0;
    EXPECT_THROW(gen_tandem_queue(p, 0.9), InvalidModel);
    p = TandemQueueParams{};
    p.q1_cap = 0;
    EXPECT_THROW(gen_tandem_queue(p, 0.9), InvalidModel);
}

TEST(EnvSpec, GenerateAllVariants) {
    for (EnvKind k : {EnvKind::Random, EnvKind::WeaklyCoupled, EnvKind::FourRoom, EnvKind::TandemQueue}) {
        EnvSpec spec;
        spec.kind = k;
        spec.n_states = 20;
        spec.n_clusters = 4;
        spec.cluster_size = 5;
        const GroundMdp mdp = generate(spec);
        EXPECT_LE(max_row_sum_error(mdp), 1e-12) << to_string(k);
        EXPECT_EQ(env_kind_from_string(to_string(k)), k);
    }
    EXPECT_THROW(env_kind_from_string("maze"), ConfigError);
}
