#pragma once

#include <optional>
#include <string>
#include <vector>

#include "asrse3/blockworld.hpp"
#include "asrse3/replay.hpp"
#include "asrse3/rng.hpp"

namespace asrse3 {

/// A recorded episode. Construction episodes are produced by reversing a
/// deconstruction episode and replaying it; `validated` marks a replay
/// that reached the goal.
struct Episode {
    enum class Direction { deconstruction, construction };
    Direction direction = Direction::deconstruction;
    bool validated = false;
    BlockState initial_state; // state before the first transition
    std::vector<BwTransition> transitions;
};

namespace detail {

/// Fills one support column with unused 1x1 blocks summing exactly to the
/// target height (lowest-index-first search).
inline bool fill_column(std::vector<Block>& blocks, std::vector<char>& used, int cx, int cy, int target) {
    if (target == 0) return true;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (used[i]) continue;
        const Block& b = blocks[i];
        if (b.spec.w != 1 || b.spec.d != 1 || b.spec.shape == Shape::roof) continue;
        if (b.spec.height > target) continue;
        used[i] = 1;
        const int h = b.spec.height;
        if (fill_column(blocks, used, cx, cy, target - h)) {
            blocks[i].x = cx;
            blocks[i].y = cy;
            blocks[i].z = target - h;
            return true;
        }
        used[i] = 0;
    }
    return false;
}

} // namespace detail

/**
 * Builds a state matching the goal template at a uniformly random in-grid
 * placement and global rotation, with the leftover inventory scattered on
 * free ground. random_h heights are drawn first, so column composition
 * adapts to the episode's block set. Throws when the template cannot fit
 * the grid or the drawn heights cannot fill the columns.
 */
inline BlockState spawn_goal_state(const BlockWorldConfig& cfg, Rng& rng) {
    const GoalTemplate& goal = cfg.goal;

    // instantiate inventory with episode heights
    std::vector<Block> blocks;
    for (const BlockSpec& spec : cfg.inventory) {
        Block b;
        b.spec = spec;
        if (spec.shape == Shape::random_h)
            b.spec.height = spec.height_choices[rng.below(static_cast<int>(spec.height_choices.size()))];
        blocks.push_back(b);
    }

    for (int attempt = 0; attempt < 100; ++attempt) {
        const int g = rng.below(4);

        // rotated requirement rects and extent
        struct SlotPose {
            int x, y, theta;
            const GoalSlot* slot;
        };
        std::vector<SlotPose> slot_poses;
        std::vector<SupportColumn> cols;
        int min_x = 1 << 20, min_y = 1 << 20, max_x = -(1 << 20), max_y = -(1 << 20);
        for (const GoalSlot& s : goal.slots) {
            const Extent e = footprint(s.geometry, s.theta);
            const auto r = detail::rotate_rect(s.rel_x, s.rel_y, e.w, e.h, g);
            slot_poses.push_back({r.x, r.y, (s.theta + g) % 4, &s});
            min_x = std::min(min_x, r.x);
            min_y = std::min(min_y, r.y);
            max_x = std::max(max_x, r.x + r.w - 1);
            max_y = std::max(max_y, r.y + r.h - 1);
        }
        for (const SupportColumn& c : goal.columns) {
            const int cx = detail::rotate_cell_x(c.rel_x, c.rel_y, g);
            const int cy = detail::rotate_cell_y(c.rel_x, c.rel_y, g);
            cols.push_back({cx, cy, c.height});
            min_x = std::min(min_x, cx);
            min_y = std::min(min_y, cy);
            max_x = std::max(max_x, cx);
            max_y = std::max(max_y, cy);
        }
        const int span_w = max_x - min_x + 1, span_h = max_y - min_y + 1;
        if (span_w > cfg.grid_w || span_h > cfg.grid_h)
            continue; // this rotation does not fit; another may

        const int tx = rng.below(cfg.grid_w - span_w + 1) - min_x;
        const int ty = rng.below(cfg.grid_h - span_h + 1) - min_y;

        std::vector<char> used(blocks.size(), 0);
        bool ok = true;

        for (const SlotPose& sp : slot_poses) {
            bool assigned = false;
            for (std::size_t i = 0; i < blocks.size() && !assigned; ++i) {
                if (used[i] || blocks[i].spec.shape != sp.slot->shape) continue;
                if (blocks[i].spec.height != sp.slot->geometry.height) continue;
                used[i] = 1;
                blocks[i].x = sp.x + tx;
                blocks[i].y = sp.y + ty;
                blocks[i].z = sp.slot->z_bottom;
                blocks[i].theta = sp.theta;
                assigned = true;
            }
            ok = ok && assigned;
        }
        for (const SupportColumn& c : cols)
            ok = ok && detail::fill_column(blocks, used, c.rel_x + tx, c.rel_y + ty, c.height);
        if (!ok) continue;

        // scatter leftovers on ground cells free of any footprint
        bool scattered = true;
        for (std::size_t i = 0; i < blocks.size() && scattered; ++i) {
            if (used[i]) continue;
            Block& b = blocks[i];
            scattered = false;
            for (int retry = 0; retry < 200 && !scattered; ++retry) {
                b.theta = rng.below(cfg.theta_count);
                const Extent e = b.extent();
                b.x = rng.below(cfg.grid_w - e.w + 1);
                b.y = rng.below(cfg.grid_h - e.h + 1);
                b.z = 0;
                bool clear = true;
                for (std::size_t j = 0; j < blocks.size() && clear; ++j) {
                    if (j == i || (!used[j] && j > i)) continue;
                    const Block& o = blocks[j];
                    const Extent eo = o.extent();
                    clear = !(b.x < o.x + eo.w && o.x < b.x + e.w && b.y < o.y + eo.h && o.y < b.y + e.h);
                }
                scattered = clear;
            }
            used[i] = 1;
        }
        if (!scattered) continue;

        BlockState st;
        st.blocks = blocks;
        if (!check_goal(st, goal, cfg.grid_w, cfg.grid_h)) continue;
        return st;
    }
    throw std::runtime_error("spawn_goal_state: could not place the goal template");
}

inline void record_step(BlockWorld& env, Observation& obs, const Action& a, Episode& ep) {
    BwTransition t;
    t.state = obs;
    t.actions = env.tuple_from_action(a);
    const StepResult r = env.step(a);
    t.next = r.obs;
    t.reward = r.reward;
    t.done = r.done;
    t.expert = true;
    ep.transitions.push_back(t);
    obs = r.obs;
}

/**
 * Scripted deconstruction: repeatedly pick the highest block (lowest index
 * on ties) and place it flat at a random free ground pose, until every
 * block rests on the ground. Records full transitions through the
 * environment. Precondition: the environment's state matches the goal.
 */
inline Episode deconstruct(BlockWorld& env) {
    const BlockWorldConfig& cfg = env.config();
    if (!check_goal(env.state(), cfg.goal, cfg.grid_w, cfg.grid_h))
        throw std::invalid_argument("deconstruct: state does not match the goal");

    Episode ep;
    ep.direction = Episode::Direction::deconstruction;
    ep.initial_state = env.state();

    Observation obs = env.last_observation();

    while (true) {
        // highest block, lowest index on ties
        int target = -1;
        for (std::size_t i = 0; i < env.state().blocks.size(); ++i) {
            const Block& b = env.state().blocks[i];
            if (b.z == 0) continue;
            if (target < 0 || b.top() > env.state().blocks[target].top()) target = static_cast<int>(i);
        }
        if (target < 0) break;

        const Block& b = env.state().blocks[target];
        const Extent e = b.extent();
        Action pick;
        pick.verb = Verb::pick;
        pick.x = b.x + (e.w - 1) / 2;
        pick.y = b.y + (e.h - 1) / 2;
        pick.theta = b.theta % symmetry_period(b.spec);
        pick.z = cfg.mode == ActionMode::XYTZ ? b.z : 0;
        if (pick.theta >= cfg.theta_count || pick.z >= cfg.z_count)
            throw std::runtime_error("deconstruct: block pose not expressible in the action space");
        record_step(env, obs, pick, ep);
        if (env.state().gripper_open()) throw std::runtime_error("deconstruct: pick failed unexpectedly");

        // random collision-free ground pose
        Action place;
        place.verb = Verb::place;
        bool found = false;
        const Block& held = env.state().blocks[target];
        for (int retry = 0; retry < 100 && !found; ++retry) {
            place.theta = env.rng().below(cfg.theta_count);
            const Extent pe = footprint(held.spec, place.theta);
            const int ax = env.rng().below(cfg.grid_w - pe.w + 1);
            const int ay = env.rng().below(cfg.grid_h - pe.h + 1);
            const HeightMap sfc = env.surface();
            bool clear = true;
            for (int y = ay; y < ay + pe.h && clear; ++y)
                for (int x = ax; x < ax + pe.w && clear; ++x) clear = sfc.at(x, y) == 0.0;
            if (clear) {
                place.x = ax + (pe.w - 1) / 2;
                place.y = ay + (pe.h - 1) / 2;
                place.z = 0;
                found = true;
            }
        }
        if (!found) throw std::runtime_error("deconstruct: no ground space for placement");
        record_step(env, obs, place, ep);
        if (env.done()) throw std::runtime_error("deconstruct: episode ended mid-deconstruction");
    }
    return ep;
}

/**
 * Reverses a deconstruction episode into a construction episode: each
 * (pick at p, place at q) pair becomes, in reverse order, (pick at q,
 * place at p). The reversed action sequence is replayed in a fresh
 * environment reset to the deconstruction's final state; observations,
 * rewards and done flags come from the replay itself. The episode is
 * validated only if the replay ends with reward 1.
 */
inline Episode reverse_episode(const Episode& decon, const BlockWorldConfig& cfg, std::uint64_t replay_seed) {
    if (decon.direction != Episode::Direction::deconstruction)
        throw std::invalid_argument("reverse_episode: not a deconstruction episode");
    if (decon.transitions.size() % 2 != 0)
        throw std::invalid_argument("reverse_episode: incomplete pick/place pairing");

    // final scene of the deconstruction
    BlockWorld env(cfg);
    BlockState final_state;
    {
        BlockWorld scratch(cfg);
        scratch.reset_to(decon.initial_state, replay_seed);
        for (const BwTransition& t : decon.transitions) scratch.step(scratch.action_from_tuple(t.actions));
        final_state = scratch.state();
    }

    Episode ep;
    ep.direction = Episode::Direction::construction;
    ep.initial_state = final_state;
    Observation obs = env.reset_to(final_state, replay_seed);

    const auto& tr = decon.transitions;
    bool failed = false;
    for (std::size_t pair = tr.size() / 2; pair-- > 0 && !failed;) {
        const std::vector<int>& pick_tuple = tr[2 * pair + 1].actions;  // decon place
        const std::vector<int>& place_tuple = tr[2 * pair].actions;     // decon pick
        try {
            record_step(env, obs, env.action_from_tuple(pick_tuple), ep);
            record_step(env, obs, env.action_from_tuple(place_tuple), ep);
        } catch (const std::exception&) {
            failed = true;
        }
    }
    ep.validated = !failed && !ep.transitions.empty() && ep.transitions.back().reward == 1.0 &&
                   ep.transitions.back().done;
    return ep;
}

struct ExpertBatch {
    std::vector<Episode> episodes; // validated construction episodes
    int rejected = 0;
};

/// End-to-end pipeline: spawn goal, deconstruct, reverse, validate.
/// Deterministic per (config, seed, count); rejected episodes are counted,
/// never silently retried.
inline ExpertBatch generate_expert_episodes(const BlockWorldConfig& cfg, int count, std::uint64_t seed) {
    ExpertBatch out;
    for (int i = 0; i < count; ++i) {
        Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(i)));
        try {
            const BlockState goal_state = spawn_goal_state(cfg, rng);
            BlockWorld env(cfg);
            env.reset_to(goal_state, rng.next());
            Episode decon = deconstruct(env);
            Episode con = reverse_episode(decon, cfg, rng.next());
            if (con.validated)
                out.episodes.push_back(std::move(con));
            else
                ++out.rejected;
        } catch (const std::exception&) {
            ++out.rejected;
        }
    }
    return out;
}

} // namespace asrse3
