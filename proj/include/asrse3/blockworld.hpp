#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "asrse3/encoding.hpp"
#include "asrse3/grid.hpp"
#include "asrse3/rng.hpp"

namespace asrse3 {

enum class Shape { cube, brick, roof, random_h };

inline const char* shape_name(Shape s) {
    switch (s) {
    case Shape::cube: return "cube";
    case Shape::brick: return "brick";
    case Shape::roof: return "roof";
    default: return "random_h";
    }
}

/// Block geometry in cells. random_h blocks draw their height per episode
/// from `height_choices`.
struct BlockSpec {
    Shape shape = Shape::cube;
    int w = 1, d = 1;
    int height = 1;
    std::vector<int> height_choices; // random_h only

    void validate() const {
        if (w < 1 || d < 1 || height < 1) throw std::invalid_argument("BlockSpec: degenerate extents");
        if (shape == Shape::random_h && height_choices.empty())
            throw std::invalid_argument("BlockSpec: random_h needs height choices");
        for (int h : height_choices)
            if (h < 1) throw std::invalid_argument("BlockSpec: height choice < 1");
    }

    int min_height() const {
        if (shape != Shape::random_h) return height;
        return *std::min_element(height_choices.begin(), height_choices.end());
    }
    int max_height() const {
        if (shape != Shape::random_h) return height;
        return *std::max_element(height_choices.begin(), height_choices.end());
    }
};

/// Footprint extent after a quarter-turn orientation.
struct Extent {
    int w = 1, h = 1;
};

inline Extent footprint(const BlockSpec& spec, int theta) {
    return (theta % 2 == 0) ? Extent{spec.w, spec.d} : Extent{spec.d, spec.w};
}

/// Orientation symmetry in quarter turns: square footprints repeat every
/// turn, oblong ones every half turn.
inline int symmetry_period(const BlockSpec& spec) { return spec.w == spec.d ? 1 : 2; }

/// A block instance in the scene. (x, y) anchors the footprint's minimum
/// corner; z is the bottom height; theta counts quarter turns.
struct Block {
    BlockSpec spec;
    int x = 0, y = 0, z = 0;
    int theta = 0;
    bool held = false;

    Extent extent() const { return footprint(spec, theta); }
    int top() const { return z + spec.height; }
    bool covers(int cx, int cy) const {
        const Extent e = extent();
        return cx >= x && cx < x + e.w && cy >= y && cy < y + e.h;
    }
    int volume() const {
        const Extent e = extent();
        return e.w * e.h * spec.height;
    }
};

/// One goal slot: a specific shape at an exact relative pose.
struct GoalSlot {
    Shape shape = Shape::cube;
    int rel_x = 0, rel_y = 0;
    int z_bottom = 0;
    int theta = 0;
    BlockSpec geometry; // extents the slot expects (heights for fixed shapes)
};

/// A column cell that must be filled solid from the ground to `height`
/// by any blocks (the improvised-base mechanism).
struct SupportColumn {
    int rel_x = 0, rel_y = 0;
    int height = 1;
};

/// Rigid goal pattern matched up to global translation and the four
/// global quarter-turn rotations. Tolerances are in cells / quarter
/// turns; the desk default is exact matching.
struct GoalTemplate {
    std::vector<GoalSlot> slots;
    std::vector<SupportColumn> columns;
    int pos_tol = 0;
    int theta_tol = 0;

    /// The template must be buildable flush under the simulator's own
    /// seating rule: slots placed in ascending z on top of columns.
    void validate() const;
};

enum class ActionMode { XY, XYT, XYTZ };

inline const char* mode_name(ActionMode m) {
    switch (m) {
    case ActionMode::XY: return "xy";
    case ActionMode::XYT: return "xyt";
    default: return "xytz";
    }
}

struct BlockWorldConfig {
    int grid_w = 8, grid_h = 8;
    ActionMode mode = ActionMode::XY;
    int theta_count = 1; // quarter-turn orientations exposed as actions
    int z_count = 1;     // height indices exposed in XYTZ
    std::vector<BlockSpec> inventory;
    GoalTemplate goal;
    int max_steps = 10;
    double noise_amplitude = 0.0;
    CropSpec crop{5, false};

    int num_levels() const {
        switch (mode) {
        case ActionMode::XY: return 1;
        case ActionMode::XYT: return 2;
        default: return 3;
        }
    }

    std::vector<int> level_sizes() const {
        std::vector<int> s = {grid_w * grid_h};
        if (mode != ActionMode::XY) s.push_back(theta_count);
        if (mode == ActionMode::XYTZ) s.push_back(z_count);
        return s;
    }

    void validate() const {
        if (grid_w < 4 || grid_h < 4) throw std::invalid_argument("config: grid must be at least 4x4");
        if (inventory.empty()) throw std::invalid_argument("config: empty inventory");
        if (max_steps < 2 * static_cast<int>(inventory.size()))
            throw std::invalid_argument("config: max_steps below 2x block count");
        if (theta_count != 1 && theta_count != 2 && theta_count != 4)
            throw std::invalid_argument("config: theta_count must be 1, 2 or 4");
        if (z_count < 1) throw std::invalid_argument("config: z_count must be positive");
        if (mode != ActionMode::XYTZ && z_count != 1)
            throw std::invalid_argument("config: z_count only meaningful in xytz mode");
        int min_h = 1 << 20;
        for (const BlockSpec& b : inventory) {
            b.validate();
            min_h = std::min(min_h, b.min_height());
        }
        if (noise_amplitude < 0 || noise_amplitude >= 0.5 * min_h)
            throw std::invalid_argument("config: noise amplitude must be in [0, half the smallest height)");
        crop.validate(grid_w, grid_h);
        if ((mode == ActionMode::XYTZ) != crop.triple)
            throw std::invalid_argument("config: triple in-hand projections iff xytz mode");
        goal.validate();
    }
};

enum class Verb { pick, place };

struct Action {
    Verb verb = Verb::pick;
    int x = 0, y = 0;
    int theta = 0;
    int z = 0;
};

/// Scene state: block poses plus the gripper. The heightmap observation
/// is derived, never stored.
struct BlockState {
    std::vector<Block> blocks;
    std::optional<int> holding; // index into blocks
    int steps_taken = 0;

    bool gripper_open() const { return !holding.has_value(); }
};

struct Observation {
    HeightMap scene;
    std::vector<HeightMap> in_hand; // 1 map (single) or 3 (triple)
    bool holding = false;
    // gross extent of the held block (0,0 when the gripper is open);
    // the compact shape summary that makes place feasibility a pure
    // function of the observation
    int held_w = 0, held_d = 0;

    bool operator==(const Observation&) const = default;
};

inline std::uint64_t hash_observation(const Observation& obs) {
    std::uint64_t h = hash_grid(obs.scene);
    for (const auto& g : obs.in_hand) h = hash_grid(g, h);
    const int held[3] = {obs.holding ? 1 : 0, obs.held_w, obs.held_d};
    return fnv1a(held, sizeof held, h);
}

struct StepResult {
    Observation obs;
    double reward = 0.0;
    bool done = false;
};

namespace detail {

/// Surface heightmap of the non-held blocks.
inline HeightMap surface_of(const BlockState& st, int w, int h) {
    HeightMap map(w, h, 0.0);
    for (const Block& b : st.blocks) {
        if (b.held) continue;
        const Extent e = b.extent();
        for (int y = b.y; y < b.y + e.h; ++y)
            for (int x = b.x; x < b.x + e.w; ++x) map.at(x, y) = std::max(map.at(x, y), double(b.top()));
    }
    return map;
}

inline int rotate_cell_x(int x, int y, int q) {
    switch (((q % 4) + 4) % 4) {
    case 0: return x;
    case 1: return -y;
    case 2: return -x;
    default: return y;
    }
}
inline int rotate_cell_y(int x, int y, int q) {
    switch (((q % 4) + 4) % 4) {
    case 0: return y;
    case 1: return x;
    case 2: return -y;
    default: return -x;
    }
}

/// Axis-aligned rect anchor after rotating the cell set by q quarter turns.
struct RotatedRect {
    int x, y, w, h;
};

inline RotatedRect rotate_rect(int x, int y, int w, int h, int q) {
    const int x1 = x + w - 1, y1 = y + h - 1;
    const int cx0 = rotate_cell_x(x, y, q), cy0 = rotate_cell_y(x, y, q);
    const int cx1 = rotate_cell_x(x1, y1, q), cy1 = rotate_cell_y(x1, y1, q);
    return {std::min(cx0, cx1), std::min(cy0, cy1), std::abs(cx0 - cx1) + 1, std::abs(cy0 - cy1) + 1};
}

} // namespace detail

inline void GoalTemplate::validate() const {
    if (slots.empty() && columns.empty()) throw std::invalid_argument("goal: empty template");
    // simulate flush construction on an unbounded virtual profile
    constexpr int pad = 64;
    HeightMap profile(3 * pad, 3 * pad, 0.0);
    for (const SupportColumn& c : columns) profile.at(c.rel_x + pad, c.rel_y + pad) = c.height;
    std::vector<const GoalSlot*> order;
    for (const GoalSlot& s : slots) order.push_back(&s);
    std::sort(order.begin(), order.end(),
              [](const GoalSlot* a, const GoalSlot* b) { return a->z_bottom < b->z_bottom; });
    for (const GoalSlot* s : order) {
        const Extent e = footprint(s->geometry, s->theta);
        for (int y = 0; y < e.h; ++y)
            for (int x = 0; x < e.w; ++x) {
                if (profile.at(s->rel_x + x + pad, s->rel_y + y + pad) != s->z_bottom)
                    throw std::invalid_argument("goal: slot at z=" + std::to_string(s->z_bottom) +
                                                " is not flush-supported by the template");
            }
        for (int y = 0; y < e.h; ++y)
            for (int x = 0; x < e.w; ++x)
                profile.at(s->rel_x + x + pad, s->rel_y + y + pad) = s->z_bottom + s->geometry.height;
    }
}

/// Goal predicate: true iff the slot blocks and filled columns of the
/// template appear in the state at some global translation and global
/// quarter-turn rotation. Pure function of the state.
inline bool check_goal(const BlockState& st, const GoalTemplate& goal, int grid_w, int grid_h) {
    const HeightMap surface = detail::surface_of(st, grid_w, grid_h);

    for (int g = 0; g < 4; ++g) {
        // rotated requirement set, then normalized so min cell is (0,0)
        struct SlotReq {
            int x, y, w, h, z, zh, theta;
            Shape shape;
            int period;
        };
        std::vector<SlotReq> sreqs;
        std::vector<SupportColumn> creqs;
        int min_x = 1 << 20, min_y = 1 << 20, max_x = -(1 << 20), max_y = -(1 << 20);

        for (const GoalSlot& s : goal.slots) {
            const Extent e = footprint(s.geometry, s.theta);
            const auto r = detail::rotate_rect(s.rel_x, s.rel_y, e.w, e.h, g);
            sreqs.push_back({r.x, r.y, r.w, r.h, s.z_bottom, s.geometry.height, (s.theta + g) % 4, s.shape,
                             symmetry_period(s.geometry)});
            min_x = std::min(min_x, r.x);
            min_y = std::min(min_y, r.y);
            max_x = std::max(max_x, r.x + r.w - 1);
            max_y = std::max(max_y, r.y + r.h - 1);
        }
        for (const SupportColumn& c : goal.columns) {
            const int cx = detail::rotate_cell_x(c.rel_x, c.rel_y, g);
            const int cy = detail::rotate_cell_y(c.rel_x, c.rel_y, g);
            creqs.push_back({cx, cy, c.height});
            min_x = std::min(min_x, cx);
            min_y = std::min(min_y, cy);
            max_x = std::max(max_x, cx);
            max_y = std::max(max_y, cy);
        }

        const int span_w = max_x - min_x + 1, span_h = max_y - min_y + 1;
        for (int ty = 0; ty + span_h <= grid_h; ++ty) {
            for (int tx = 0; tx + span_w <= grid_w; ++tx) {
                const int ox = tx - min_x, oy = ty - min_y;

                bool ok = true;
                // columns: solid fill from the ground to the target height
                for (const SupportColumn& c : creqs) {
                    const int cx = c.rel_x + ox, cy = c.rel_y + oy;
                    if (surface.at(cx, cy) < c.height) {
                        ok = false;
                        break;
                    }
                    for (const Block& b : st.blocks) {
                        if (b.held || !b.covers(cx, cy)) continue;
                        if (b.z < c.height && b.top() > c.height) { // straddles the boundary
                            ok = false;
                            break;
                        }
                    }
                    if (!ok) break;
                }
                if (!ok) continue;

                // slots: injective assignment of exact blocks
                std::vector<char> used(st.blocks.size(), 0);
                for (const auto& s : sreqs) {
                    bool matched = false;
                    for (std::size_t i = 0; i < st.blocks.size() && !matched; ++i) {
                        const Block& b = st.blocks[i];
                        if (used[i] || b.held || b.spec.shape != s.shape) continue;
                        const Extent e = b.extent();
                        if (std::abs(b.x - (s.x + ox)) > goal.pos_tol) continue;
                        if (std::abs(b.y - (s.y + oy)) > goal.pos_tol) continue;
                        if (e.w != s.w || e.h != s.h) continue;
                        if (b.z != s.z || b.spec.height != s.zh) continue;
                        const int dt = ((b.theta - s.theta) % s.period + s.period) % s.period;
                        if (std::min(dt, s.period - dt) > goal.theta_tol) continue;
                        used[i] = 1;
                        matched = true;
                    }
                    if (!matched) {
                        ok = false;
                        break;
                    }
                }
                if (ok) return true;
            }
        }
    }
    return false;
}

/**
 * Deterministic heightmap block-construction environment.
 *
 * Observations are (scene heightmap, in-hand image, gripper bit). Picks
 * remove the topmost unburdened block whose footprint covers the action
 * cell when the commanded orientation (and height, in xytz mode) is
 * compatible; incompatible picks are no-ops that consume a step. A place
 * seats the held block flush when every footprint cell is supported at
 * one uniform height (and the commanded z matches it in xytz mode);
 * otherwise the block is knocked off to the nearest free flat ground.
 * Reward is 1 exactly when the goal template is matched, which also ends
 * the episode.
 */
class BlockWorld {
public:
    explicit BlockWorld(BlockWorldConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

    const BlockWorldConfig& config() const { return cfg_; }
    const BlockState& state() const { return state_; }
    bool done() const { return done_; }

    /// The observation produced by the latest reset/step.
    const Observation& last_observation() const { return last_obs_; }

    Observation reset(std::uint64_t seed) {
        rng_ = Rng(seed);
        state_ = BlockState{};
        done_ = false;
        for (const BlockSpec& spec : cfg_.inventory) {
            Block b;
            b.spec = spec;
            if (spec.shape == Shape::random_h)
                b.spec.height = spec.height_choices[rng_.below(static_cast<int>(spec.height_choices.size()))];
            state_.blocks.push_back(b);
        }
        scatter_on_ground(state_.blocks, /*skip_placed=*/0);
        in_hand_ = zero_in_hand(cfg_.crop);
        pick_theta_ = 0;
        return refresh_observation();
    }

    /// Restores a specific state (expert replay); the caller owns seeding.
    Observation reset_to(const BlockState& st, std::uint64_t seed) {
        rng_ = Rng(seed);
        state_ = st;
        state_.steps_taken = 0;
        state_.holding.reset();
        for (Block& b : state_.blocks) b.held = false;
        done_ = false;
        in_hand_ = zero_in_hand(cfg_.crop);
        pick_theta_ = 0;
        return refresh_observation();
    }

    StepResult step(const Action& a) {
        if (done_) throw std::logic_error("step: episode already done");
        require_in_grid(a);
        if ((a.verb == Verb::pick) != state_.gripper_open())
            throw std::logic_error("step: verb inconsistent with gripper state");

        if (a.verb == Verb::pick)
            do_pick(a);
        else
            do_place(a);

        ++state_.steps_taken;
        const bool matched = check_goal(state_, cfg_.goal, cfg_.grid_w, cfg_.grid_h);
        const double reward = matched ? 1.0 : 0.0;
        done_ = matched || state_.steps_taken >= cfg_.max_steps;
        return {refresh_observation(), reward, done_};
    }

    /// Per-level feasibility mask conditioned on the prefix of already
    /// chosen partial actions. Level 0 spans the grid cells; picks need
    /// material under the cell, places need the held footprint in-grid.
    std::vector<char> feasibility_mask(int level, std::span<const int> prefix) const {
        const bool picking = state_.gripper_open();
        if (level == 0) {
            std::vector<char> m(static_cast<std::size_t>(cfg_.grid_w) * cfg_.grid_h, 0);
            const HeightMap surface = detail::surface_of(state_, cfg_.grid_w, cfg_.grid_h);
            for (int y = 0; y < cfg_.grid_h; ++y)
                for (int x = 0; x < cfg_.grid_w; ++x) {
                    bool ok;
                    if (picking) {
                        ok = surface.at(x, y) > 0;
                    } else {
                        ok = false;
                        for (int t = 0; t < cfg_.theta_count && !ok; ++t) ok = fits_in_grid(x, y, t);
                    }
                    m[static_cast<std::size_t>(y) * cfg_.grid_w + x] = ok ? 1 : 0;
                }
            return m;
        }
        if (level == 1) {
            std::vector<char> m(cfg_.theta_count, 1);
            if (!picking) {
                const auto [ax, ay] = cell_of(prefix[0]);
                for (int t = 0; t < cfg_.theta_count; ++t) m[t] = fits_in_grid(ax, ay, t) ? 1 : 0;
            }
            return m;
        }
        return std::vector<char>(cfg_.z_count, 1);
    }

    Action action_from_tuple(std::span<const int> tuple) const {
        if (static_cast<int>(tuple.size()) != cfg_.num_levels())
            throw std::invalid_argument("action_from_tuple: wrong arity");
        Action a;
        a.verb = state_.gripper_open() ? Verb::pick : Verb::place;
        const auto [x, y] = cell_of(tuple[0]);
        a.x = x;
        a.y = y;
        if (cfg_.mode != ActionMode::XY) a.theta = tuple[1];
        if (cfg_.mode == ActionMode::XYTZ) a.z = tuple[2];
        return a;
    }

    std::vector<int> tuple_from_action(const Action& a) const {
        std::vector<int> t = {a.y * cfg_.grid_w + a.x};
        if (cfg_.mode != ActionMode::XY) t.push_back(a.theta);
        if (cfg_.mode == ActionMode::XYTZ) t.push_back(a.z);
        return t;
    }

    /// Total block volume (held included): the conserved quantity.
    int total_volume() const {
        int v = 0;
        for (const Block& b : state_.blocks) v += b.volume();
        return v;
    }

    /// Structural audit used by property tests: in-grid, no overlaps,
    /// every block seated flush on ground or full support.
    void audit_state() const {
        for (std::size_t i = 0; i < state_.blocks.size(); ++i) {
            const Block& b = state_.blocks[i];
            if (b.held) {
                if (!state_.holding || *state_.holding != static_cast<int>(i))
                    throw std::logic_error("audit: stray held flag");
                continue;
            }
            const Extent e = b.extent();
            if (b.x < 0 || b.y < 0 || b.x + e.w > cfg_.grid_w || b.y + e.h > cfg_.grid_h)
                throw std::logic_error("audit: block out of grid");
            for (int y = b.y; y < b.y + e.h; ++y)
                for (int x = b.x; x < b.x + e.w; ++x) {
                    // support directly under every footprint cell
                    int below = 0;
                    for (const Block& c : state_.blocks) {
                        if (c.held || &c == &b) continue;
                        if (c.covers(x, y) && c.top() <= b.z) below = std::max(below, c.top());
                        if (c.covers(x, y) && c.z < b.top() && c.top() > b.z)
                            throw std::logic_error("audit: overlapping blocks");
                    }
                    if (below != b.z) throw std::logic_error("audit: block not flush-supported");
                }
        }
    }

    /// The true (noise-free) surface map; masks and the expert use it.
    HeightMap surface() const { return detail::surface_of(state_, cfg_.grid_w, cfg_.grid_h); }

    Rng& rng() { return rng_; }

private:
    friend class GoalSpawner;

    std::pair<int, int> cell_of(int idx) const { return {idx % cfg_.grid_w, idx / cfg_.grid_w}; }

    void require_in_grid(const Action& a) const {
        if (a.x < 0 || a.x >= cfg_.grid_w || a.y < 0 || a.y >= cfg_.grid_h)
            throw std::invalid_argument("step: action cell out of grid");
        if (a.theta < 0 || a.theta >= cfg_.theta_count) throw std::invalid_argument("step: theta out of range");
        if (a.z < 0 || a.z >= cfg_.z_count) throw std::invalid_argument("step: z out of range");
        if (a.verb == Verb::place) {
            const Block& held = state_.blocks[*state_.holding];
            const Extent e = footprint(held.spec, a.theta);
            const int ax = a.x - (e.w - 1) / 2, ay = a.y - (e.h - 1) / 2;
            if (ax < 0 || ay < 0 || ax + e.w > cfg_.grid_w || ay + e.h > cfg_.grid_h)
                throw std::invalid_argument("step: held footprint hangs out of grid");
        }
    }

    bool fits_in_grid(int cx, int cy, int theta) const {
        if (!state_.holding) return false;
        const Block& held = state_.blocks[*state_.holding];
        const Extent e = footprint(held.spec, theta);
        const int ax = cx - (e.w - 1) / 2, ay = cy - (e.h - 1) / 2;
        return ax >= 0 && ay >= 0 && ax + e.w <= cfg_.grid_w && ay + e.h <= cfg_.grid_h;
    }

    void do_pick(const Action& a) {
        int best = -1;
        int best_top = 0;
        for (std::size_t i = 0; i < state_.blocks.size(); ++i) {
            const Block& b = state_.blocks[i];
            if (b.held || !b.covers(a.x, a.y)) continue;
            if (best < 0 || b.top() > best_top) {
                best = static_cast<int>(i);
                best_top = b.top();
            }
        }
        if (best < 0) return; // empty cell: no-op pick

        Block& b = state_.blocks[best];
        const int period = symmetry_period(b.spec);
        if (((a.theta - b.theta) % period + period) % period != 0) return; // orientation mismatch
        if (cfg_.mode == ActionMode::XYTZ && a.z != b.z) return;           // wrong grasp height
        if (carries_load(best)) return;                                    // something rests on it

        // in-hand from the pre-pick observed scene at the pick pose
        in_hand_ = in_hand_image(last_scene_, a.x, a.y, a.theta, a.z, cfg_.crop);
        b.held = true;
        state_.holding = best;
        pick_theta_ = a.theta;
    }

    bool carries_load(int idx) const {
        const Block& b = state_.blocks[idx];
        for (const Block& c : state_.blocks) {
            if (&c == &b || c.held || c.z != b.top()) continue;
            const Extent eb = b.extent(), ec = c.extent();
            const bool overlap = c.x < b.x + eb.w && b.x < c.x + ec.w && c.y < b.y + eb.h && b.y < c.y + ec.h;
            if (overlap) return true;
        }
        return false;
    }

    void do_place(const Action& a) {
        Block& b = state_.blocks[*state_.holding];
        b.theta = ((b.theta - pick_theta_ + a.theta) % 4 + 4) % 4;
        const Extent e = b.extent();
        const int ax = a.x - (e.w - 1) / 2, ay = a.y - (e.h - 1) / 2;

        const HeightMap sfc = surface();
        double rest = 0.0;
        bool uniform = true;
        for (int y = ay; y < ay + e.h; ++y)
            for (int x = ax; x < ax + e.w; ++x) rest = std::max(rest, sfc.at(x, y));
        for (int y = ay; y < ay + e.h && uniform; ++y)
            for (int x = ax; x < ax + e.w && uniform; ++x) uniform = sfc.at(x, y) == rest;

        const bool seat_matches = cfg_.mode != ActionMode::XYTZ || a.z == static_cast<int>(rest);
        if (uniform && seat_matches) {
            b.x = ax;
            b.y = ay;
            b.z = static_cast<int>(rest);
        } else {
            knock_off(b, a.x, a.y);
        }
        b.held = false;
        state_.holding.reset();
        in_hand_ = zero_in_hand(cfg_.crop);
    }

    /// Unstable placement: the block lands flat on the nearest free ground
    /// footprint, scanning outward from the commanded cell (ring by ring,
    /// then row-major inside a ring).
    void knock_off(Block& b, int cx, int cy) {
        const Extent e = b.extent();
        const HeightMap sfc = surface();
        const int max_r = std::max(cfg_.grid_w, cfg_.grid_h);
        for (int r = 0; r <= max_r; ++r) {
            for (int dy = -r; dy <= r; ++dy) {
                for (int dx = -r; dx <= r; ++dx) {
                    if (std::max(std::abs(dx), std::abs(dy)) != r) continue;
                    const int ax = cx + dx - (e.w - 1) / 2, ay = cy + dy - (e.h - 1) / 2;
                    if (ax < 0 || ay < 0 || ax + e.w > cfg_.grid_w || ay + e.h > cfg_.grid_h) continue;
                    bool clear = true;
                    for (int y = ay; y < ay + e.h && clear; ++y)
                        for (int x = ax; x < ax + e.w && clear; ++x) clear = sfc.at(x, y) == 0.0;
                    if (clear) {
                        b.x = ax;
                        b.y = ay;
                        b.z = 0;
                        return;
                    }
                }
            }
        }
        throw std::runtime_error("place: no free ground for knocked-off block");
    }

    /// Scatters blocks[skip_placed..] onto free ground at uniform random
    /// poses; bounded rejection sampling.
    void scatter_on_ground(std::vector<Block>& blocks, std::size_t skip_placed) {
        for (std::size_t i = skip_placed; i < blocks.size(); ++i) {
            Block& b = blocks[i];
            bool placed = false;
            for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
                b.theta = rng_.below(cfg_.theta_count);
                const Extent e = b.extent();
                b.x = rng_.below(cfg_.grid_w - e.w + 1);
                b.y = rng_.below(cfg_.grid_h - e.h + 1);
                b.z = 0;
                placed = true;
                for (std::size_t j = 0; j < i && placed; ++j) {
                    const Block& o = blocks[j];
                    const Extent eo = o.extent();
                    placed = !(b.x < o.x + eo.w && o.x < b.x + e.w && b.y < o.y + eo.h && o.y < b.y + e.h);
                }
            }
            if (!placed) throw std::runtime_error("reset: could not scatter inventory (grid too small?)");
        }
    }

    Observation refresh_observation() {
        Observation obs;
        obs.scene = surface();
        if (cfg_.noise_amplitude > 0.0) {
            for (double& v : obs.scene.data())
                v = std::max(0.0, v + rng_.range(-cfg_.noise_amplitude, cfg_.noise_amplitude));
        }
        obs.in_hand = in_hand_;
        obs.holding = !state_.gripper_open();
        if (state_.holding) {
            const Block& held = state_.blocks[*state_.holding];
            obs.held_w = held.spec.w;
            obs.held_d = held.spec.d;
        }
        last_scene_ = obs.scene;
        last_obs_ = obs;
        return obs;
    }

    BlockWorldConfig cfg_;
    BlockState state_;
    Rng rng_{0};
    bool done_ = false;
    std::vector<HeightMap> in_hand_;
    HeightMap last_scene_;
    Observation last_obs_;
    int pick_theta_ = 0;
};

} // namespace asrse3
