#include <gtest/gtest.h>

#include "asrse3/blockworld.hpp"
#include "asrse3/tasks.hpp"

using namespace asrse3;

namespace {

BlockState two_cubes_at(int x0, int y0, int x1, int y1) {
    BlockState st;
    Block a;
    a.spec = shape_spec(Shape::cube);
    a.x = x0;
    a.y = y0;
    Block b = a;
    b.x = x1;
    b.y = y1;
    st.blocks = {a, b};
    return st;
}

} // namespace

TEST(Reset, DeterministicGivenSeed) {
    BlockWorld env1(builtin_task("2s")), env2(builtin_task("2s"));
    const Observation o1 = env1.reset(7);
    const Observation o2 = env2.reset(7);
    EXPECT_EQ(o1, o2);
    ASSERT_EQ(env1.state().blocks.size(), env2.state().blocks.size());
    for (std::size_t i = 0; i < env1.state().blocks.size(); ++i) {
        EXPECT_EQ(env1.state().blocks[i].x, env2.state().blocks[i].x);
        EXPECT_EQ(env1.state().blocks[i].y, env2.state().blocks[i].y);
    }
}

TEST(Reset, VolumeAccountingAndGroundPlacement) {
    for (const std::string& id : {"2s", "4s", "h2", "h4", "imdis"}) {
        BlockWorld env(builtin_task(id));
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const Observation obs = env.reset(seed);
            int volume = 0;
            for (const Block& b : env.state().blocks) {
                EXPECT_EQ(b.z, 0);
                volume += b.volume();
            }
            EXPECT_EQ(obs.scene.sum(), double(volume)) << id;
            EXPECT_NO_THROW(env.audit_state()) << id;
            EXPECT_FALSE(obs.holding);
            for (const auto& g : obs.in_hand) EXPECT_EQ(g.sum(), 0.0);
        }
    }
}

TEST(Step, PickOnEmptyCellIsNoOp) {
    BlockWorld env(builtin_task("2s"));
    env.reset(3);
    // find an empty cell
    const HeightMap sfc = env.surface();
    int ex = -1, ey = -1;
    for (int y = 0; y < 8 && ex < 0; ++y)
        for (int x = 0; x < 8 && ex < 0; ++x)
            if (sfc.at(x, y) == 0.0) {
                ex = x;
                ey = y;
            }
    ASSERT_GE(ex, 0);
    const auto before = env.state().blocks;
    const StepResult r = env.step({Verb::pick, ex, ey});
    EXPECT_EQ(r.reward, 0.0);
    EXPECT_TRUE(env.state().gripper_open());
    EXPECT_EQ(env.state().steps_taken, 1);
    for (std::size_t i = 0; i < before.size(); ++i) {
        EXPECT_EQ(env.state().blocks[i].x, before[i].x);
        EXPECT_EQ(env.state().blocks[i].y, before[i].y);
    }
}

TEST(Step, HandBuiltTwoStackEpisode) {
    BlockWorld env(builtin_task("2s"));
    env.reset(0);
    env.reset_to(two_cubes_at(1, 1, 5, 5), 0);
    StepResult r = env.step({Verb::pick, 1, 1});
    EXPECT_TRUE(r.obs.holding);
    EXPECT_EQ(r.reward, 0.0);
    EXPECT_GT(r.obs.in_hand[0].sum(), 0.0); // crop saw the cube
    r = env.step({Verb::place, 5, 5});
    EXPECT_EQ(r.reward, 1.0);
    EXPECT_TRUE(r.done);
    EXPECT_THROW(env.step({Verb::pick, 5, 5}), std::logic_error); // acting after done
}

TEST(Step, VolumeConservedAcrossEpisode) {
    BlockWorld env(builtin_task("h4"));
    Observation obs = env.reset(11);
    const double volume = obs.scene.sum();
    Rng rng(5);
    for (int t = 0; t < 20 && !env.done(); ++t) {
        const auto mask = env.feasibility_mask(0, {});
        std::vector<int> open;
        for (int i = 0; i < static_cast<int>(mask.size()); ++i)
            if (mask[i]) open.push_back(i);
        ASSERT_FALSE(open.empty());
        std::vector<int> tuple = {open[rng.below(static_cast<int>(open.size()))]};
        const auto tmask = env.feasibility_mask(1, tuple);
        std::vector<int> topen;
        for (int i = 0; i < static_cast<int>(tmask.size()); ++i)
            if (tmask[i]) topen.push_back(i);
        tuple.push_back(topen[rng.below(static_cast<int>(topen.size()))]);
        const StepResult r = env.step(env.action_from_tuple(tuple));
        double held = 0.0;
        if (env.state().holding) held = env.state().blocks[*env.state().holding].volume();
        EXPECT_EQ(r.obs.scene.sum() + held, volume);
        EXPECT_NO_THROW(env.audit_state());
        EXPECT_LE(r.reward, 1.0);
        if (r.reward == 1.0) EXPECT_TRUE(r.done);
        obs = r.obs;
    }
}

TEST(Step, WrongVerbAndOutOfGridRejected) {
    BlockWorld env(builtin_task("2s"));
    env.reset(1);
    EXPECT_THROW(env.step({Verb::place, 2, 2}), std::logic_error); // nothing held
    EXPECT_THROW(env.step({Verb::pick, -1, 2}), std::invalid_argument);
    EXPECT_THROW(env.step({Verb::pick, 2, 9}), std::invalid_argument);
}

TEST(Step, UnstablePlacementKnocksOff) {
    BlockWorldConfig cfg = builtin_task("h2");
    BlockWorld env(cfg);
    env.reset(2);
    BlockState st;
    Block c0, c1, roof;
    c0.spec = c1.spec = shape_spec(Shape::cube);
    roof.spec = shape_spec(Shape::roof);
    c0.x = 2;
    c0.y = 2;
    c1.x = 5;
    c1.y = 5;
    roof.x = 0;
    roof.y = 0;
    st.blocks = {c0, c1, roof};
    env.reset_to(st, 0);

    // roof across (2,2) and (3,2): support heights 1 and 0 -> falls flat
    env.step({Verb::pick, 0, 0, 0});
    const StepResult r = env.step({Verb::place, 2, 2, 0});
    EXPECT_EQ(r.reward, 0.0);
    const Block& placed = env.state().blocks[2];
    EXPECT_EQ(placed.z, 0);
    EXPECT_NO_THROW(env.audit_state());
}

TEST(Step, FlushRoofSeatsOnTwoCubes) {
    BlockWorld env(builtin_task("h2"));
    env.reset(2);
    BlockState st;
    Block c0, c1, roof;
    c0.spec = c1.spec = shape_spec(Shape::cube);
    roof.spec = shape_spec(Shape::roof);
    c0.x = 3;
    c0.y = 3;
    c1.x = 4;
    c1.y = 3;
    roof.x = 0;
    roof.y = 0;
    st.blocks = {c0, c1, roof};
    env.reset_to(st, 0);

    env.step({Verb::pick, 0, 0, 0});
    // roof anchor = action cell - (w-1)/2; action (3,3) seats at (3,3)+(4,3)
    const StepResult r = env.step({Verb::place, 3, 3, 0});
    EXPECT_EQ(env.state().blocks[2].z, 1);
    EXPECT_EQ(r.reward, 1.0); // h2 structure complete
    EXPECT_TRUE(r.done);
}

TEST(Step, PickOrientationCompatibility) {
    BlockWorld env(builtin_task("h2"));
    env.reset(4);
    BlockState st;
    Block c0, c1, roof;
    c0.spec = c1.spec = shape_spec(Shape::cube);
    roof.spec = shape_spec(Shape::roof);
    c0.x = 0;
    c0.y = 0;
    c1.x = 0;
    c1.y = 2;
    roof.x = 4;
    roof.y = 4;
    roof.theta = 0; // horizontal, covers (4,4)-(5,4)
    st.blocks = {c0, c1, roof};
    env.reset_to(st, 0);

    env.step({Verb::pick, 4, 4, 1}); // wrong orientation for an oblong block
    EXPECT_TRUE(env.state().gripper_open());
    env.step({Verb::pick, 4, 4, 0});
    EXPECT_FALSE(env.state().gripper_open());
}

TEST(Step, LoadedBlockCannotBePicked) {
    BlockWorld env(builtin_task("h2"));
    env.reset(4);
    BlockState st;
    Block roof, cube, other;
    roof.spec = shape_spec(Shape::roof);
    roof.x = 2;
    roof.y = 2; // covers (2,2),(3,2)
    cube.spec = shape_spec(Shape::cube);
    cube.x = 2;
    cube.y = 2;
    cube.z = 1; // rests on the roof's left cell
    other.spec = shape_spec(Shape::cube);
    other.x = 6;
    other.y = 6;
    st.blocks = {roof, cube, other};
    env.reset_to(st, 0);
    EXPECT_NO_THROW(env.audit_state());

    env.step({Verb::pick, 3, 2, 0}); // roof cell not under the cube, but loaded
    EXPECT_TRUE(env.state().gripper_open());
    env.step({Verb::pick, 2, 2, 0}); // topmost at this cell is the cube
    EXPECT_FALSE(env.state().gripper_open());
    EXPECT_TRUE(env.state().blocks[1].held);
}

TEST(Step, PlaceRotatesHeldBlock) {
    BlockWorld env(builtin_task("h2"));
    env.reset(4);
    BlockState st;
    Block roof, c0, c1;
    roof.spec = shape_spec(Shape::roof);
    roof.x = 1;
    roof.y = 1;
    c0.spec = c1.spec = shape_spec(Shape::cube);
    c0.x = 5;
    c0.y = 5;
    c1.x = 7;
    c1.y = 7;
    st.blocks = {roof, c0, c1};
    env.reset_to(st, 0);

    env.step({Verb::pick, 1, 1, 0});
    env.step({Verb::place, 4, 2, 1}); // place vertical
    const Block& placed = env.state().blocks[0];
    EXPECT_EQ(placed.theta % 2, 1);
    EXPECT_EQ(placed.extent().w, 1);
    EXPECT_EQ(placed.extent().h, 2);
}

TEST(Goal, TranslationAndRotationInvariance) {
    const BlockWorldConfig cfg = builtin_task("h2");
    BlockState st;
    Block c0, c1, roof;
    c0.spec = c1.spec = shape_spec(Shape::cube);
    roof.spec = shape_spec(Shape::roof);
    // vertical variant: rotated 90 degrees, translated
    c0.x = 6;
    c0.y = 2;
    c1.x = 6;
    c1.y = 3;
    roof.x = 6;
    roof.y = 2;
    roof.z = 1;
    roof.theta = 1;
    st.blocks = {c0, c1, roof};
    EXPECT_TRUE(check_goal(st, cfg.goal, cfg.grid_w, cfg.grid_h));

    // shift by one cell: still matched
    for (Block& b : st.blocks) b.x -= 1;
    EXPECT_TRUE(check_goal(st, cfg.goal, cfg.grid_w, cfg.grid_h));
}

TEST(Goal, OffsetBeyondToleranceFails) {
    const BlockWorldConfig cfg = builtin_task("4s");
    BlockState st;
    for (int z = 0; z < 3; ++z) {
        Block b;
        b.spec = shape_spec(Shape::cube);
        b.x = 2;
        b.y = 2;
        b.z = z;
        st.blocks.push_back(b);
    }
    Block stray;
    stray.spec = shape_spec(Shape::cube);
    stray.x = 4;
    stray.y = 2;
    st.blocks.push_back(stray);
    EXPECT_FALSE(check_goal(st, cfg.goal, cfg.grid_w, cfg.grid_h));

    // complete the tower: matched
    st.blocks[3].x = 2;
    st.blocks[3].z = 3;
    EXPECT_TRUE(check_goal(st, cfg.goal, cfg.grid_w, cfg.grid_h));
}

TEST(Goal, ImprovisedBaseEitherComposition) {
    const BlockWorldConfig cfg = builtin_task("imdis");
    // one tall block and two shorts forming the two columns
    BlockState st;
    Block tall;
    tall.spec = shape_spec(Shape::random_h);
    tall.spec.height = 2;
    tall.x = 3;
    tall.y = 3;
    Block s1 = tall, s2 = tall;
    s1.spec.height = 1;
    s2.spec.height = 1;
    s1.x = 4;
    s1.y = 3;
    s2.x = 4;
    s2.y = 3;
    s2.z = 1;
    Block roof;
    roof.spec = shape_spec(Shape::roof);
    roof.x = 3;
    roof.y = 3;
    roof.z = 2;
    Block leftover1;
    leftover1.spec = shape_spec(Shape::random_h);
    leftover1.x = 0;
    leftover1.y = 0;
    Block leftover2 = leftover1;
    leftover2.x = 0;
    leftover2.y = 6;
    st.blocks = {tall, s1, s2, roof, leftover1, leftover2};
    EXPECT_TRUE(check_goal(st, cfg.goal, cfg.grid_w, cfg.grid_h));
}

TEST(Goal, ColumnRejectsStraddlingBlock) {
    GoalTemplate goal;
    goal.columns = {{0, 0, 2}};
    BlockState st;
    Block b;
    b.spec = shape_spec(Shape::random_h);
    b.spec.height = 3; // crosses the height-2 boundary
    b.x = 4;
    b.y = 4;
    st.blocks = {b};
    EXPECT_FALSE(check_goal(st, goal, 8, 8));

    st.blocks[0].spec.height = 2; // exact fill
    EXPECT_TRUE(check_goal(st, goal, 8, 8));

    Block top = st.blocks[0];
    st.blocks[0].spec.height = 1; // two shorts
    top.spec.height = 1;
    top.z = 1;
    st.blocks.push_back(top);
    EXPECT_TRUE(check_goal(st, goal, 8, 8));
}

TEST(Masks, PickMaskMatchesOccupancy) {
    BlockWorld env(builtin_task("2s"));
    env.reset(9);
    env.reset_to(two_cubes_at(2, 2, 5, 6), 0);
    const auto mask = env.feasibility_mask(0, {});
    const HeightMap sfc = env.surface();
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            EXPECT_EQ(mask[y * 8 + x] != 0, sfc.at(x, y) > 0.0);
}

TEST(Masks, PlaceMaskRespectsFootprintFit) {
    BlockWorld env(builtin_task("h2"));
    env.reset(10);
    BlockState st;
    Block roof, c0, c1;
    roof.spec = shape_spec(Shape::roof);
    roof.x = 3;
    roof.y = 3;
    c0.spec = c1.spec = shape_spec(Shape::cube);
    c0.x = 0;
    c0.y = 0;
    c1.x = 7;
    c1.y = 7;
    st.blocks = {roof, c0, c1};
    env.reset_to(st, 0);
    env.step({Verb::pick, 3, 3, 0});

    // at x=7 the 2-wide horizontal footprint hangs out of grid, but the
    // vertical orientation fits: feasible at level 0 via "some theta"
    const auto m0 = env.feasibility_mask(0, {});
    EXPECT_TRUE(m0[3 * 8 + 7]);
    const std::vector<int> prefix = {3 * 8 + 7};
    const auto m1 = env.feasibility_mask(1, prefix);
    EXPECT_FALSE(m1[0]); // horizontal
    EXPECT_TRUE(m1[1]);  // vertical

    // bottom-right corner: no orientation fits
    const auto corner = env.feasibility_mask(1, std::vector<int>{7 * 8 + 7});
    EXPECT_FALSE(corner[0]);
    EXPECT_FALSE(corner[1]);
    EXPECT_FALSE(m0[7 * 8 + 7]);
}

TEST(Noise, BoundedJitterAndDeterminism) {
    BlockWorldConfig cfg = builtin_task("2s");
    cfg.noise_amplitude = 0.4;
    BlockWorld env1(cfg), env2(cfg);
    const Observation o1 = env1.reset(21);
    const Observation o2 = env2.reset(21);
    EXPECT_EQ(o1.scene, o2.scene); // same seed, same jitter
    const HeightMap truth = env1.surface();
    bool any_jitter = false;
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            EXPECT_GE(o1.scene.at(x, y), 0.0);
            EXPECT_LE(std::abs(o1.scene.at(x, y) - truth.at(x, y)), 0.4 + 1e-12);
            any_jitter = any_jitter || o1.scene.at(x, y) != truth.at(x, y);
        }
    EXPECT_TRUE(any_jitter);
}

TEST(Xytz, HeightLevelBehaviour) {
    BlockWorld env(builtin_task("4s-xytz"));
    env.reset(3);
    BlockState st = two_cubes_at(2, 2, 5, 5);
    Block c3, c4;
    c3.spec = c4.spec = shape_spec(Shape::cube);
    c3.x = 2;
    c3.y = 5;
    c4.x = 5;
    c4.y = 2;
    st.blocks.push_back(c3);
    st.blocks.push_back(c4);
    env.reset_to(st, 0);

    env.step({Verb::pick, 2, 2, 0, 1}); // wrong z: block bottom is 0
    EXPECT_TRUE(env.state().gripper_open());
    StepResult r = env.step({Verb::pick, 2, 2, 0, 0});
    EXPECT_FALSE(env.state().gripper_open());
    ASSERT_EQ(r.obs.in_hand.size(), 3u); // triple projections in xytz

    r = env.step({Verb::place, 5, 5, 0, 3}); // commanded far above the seat
    EXPECT_EQ(env.state().blocks[0].z, 0);   // knocked off to ground
    env.step({Verb::pick, 2, 5, 0, 0});
    env.step({Verb::place, 5, 2, 0, 1}); // correct seat on the cube at (5,2)
    EXPECT_EQ(env.state().blocks[2].z, 1);
}

TEST(Episode, FullTrajectoryDeterminism) {
    const BlockWorldConfig cfg = builtin_task("h2");
    BlockWorld env1(cfg), env2(cfg);
    env1.reset(33);
    env2.reset(33);
    Rng rng1(4), rng2(4);
    for (int t = 0; t < 10 && !env1.done(); ++t) {
        auto pick_random = [&](BlockWorld& env, Rng& rng) {
            std::vector<int> tuple;
            for (int level = 0; level < cfg.num_levels(); ++level) {
                const auto m = env.feasibility_mask(level, tuple);
                std::vector<int> open;
                for (int i = 0; i < static_cast<int>(m.size()); ++i)
                    if (m[i]) open.push_back(i);
                tuple.push_back(open[rng.below(static_cast<int>(open.size()))]);
            }
            return env.step(env.action_from_tuple(tuple));
        };
        const StepResult r1 = pick_random(env1, rng1);
        const StepResult r2 = pick_random(env2, rng2);
        EXPECT_EQ(r1.obs, r2.obs);
        EXPECT_EQ(r1.reward, r2.reward);
    }
}

TEST(Tasks, SaveLoadRoundTrip) {
    for (const std::string& id : builtin_task_ids()) {
        const BlockWorldConfig cfg = builtin_task(id);
        std::stringstream ss;
        save_task(ss, cfg);
        const BlockWorldConfig back = load_task(ss);
        EXPECT_EQ(task_hash(back), task_hash(cfg)) << id;
        EXPECT_EQ(back.inventory.size(), cfg.inventory.size());
        EXPECT_EQ(back.goal.slots.size(), cfg.goal.slots.size());
    }
}

TEST(Tasks, ConfigValidation) {
    BlockWorldConfig cfg = builtin_task("2s");
    cfg.max_steps = 3;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = builtin_task("2s");
    cfg.noise_amplitude = 0.5;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = builtin_task("2s");
    cfg.theta_count = 3;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    GoalTemplate bad;
    bad.slots = {{Shape::cube, 0, 0, 2, 0, shape_spec(Shape::cube)}}; // floats in mid-air
    EXPECT_THROW(bad.validate(), std::invalid_argument);
}
