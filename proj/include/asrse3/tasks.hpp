#pragma once

#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "asrse3/blockworld.hpp"

namespace asrse3 {

inline BlockSpec shape_spec(Shape s) {
    switch (s) {
    case Shape::cube: return {Shape::cube, 1, 1, 1, {}};
    case Shape::brick: return {Shape::brick, 2, 1, 1, {}};
    case Shape::roof: return {Shape::roof, 2, 1, 1, {}};
    default: return {Shape::random_h, 1, 1, 1, {1, 2}};
    }
}

inline Shape shape_from_name(const std::string& name) {
    if (name == "cube") return Shape::cube;
    if (name == "brick") return Shape::brick;
    if (name == "roof") return Shape::roof;
    if (name == "random_h") return Shape::random_h;
    throw std::invalid_argument("unknown shape '" + name + "'");
}

/// Stack of n cubes, matched column-exact.
inline GoalTemplate stack_goal(int n) {
    GoalTemplate g;
    for (int z = 0; z < n; ++z) g.slots.push_back({Shape::cube, 0, 0, z, 0, shape_spec(Shape::cube)});
    return g;
}

inline const std::vector<std::string>& builtin_task_ids() {
    static const std::vector<std::string> ids = {"2s", "4s", "h2", "h4", "imdis", "4s-xytz"};
    return ids;
}

/**
 * Built-in desk tasks.
 *   2s      two cubes stacked, position-only actions
 *   4s      four-cube tower, position-only actions
 *   h2      roof across two side-by-side cubes, (x,y,theta) actions
 *   h4      roof on a 2x2 cube wall, (x,y,theta) actions
 *   imdis   roof on a height-2 base improvised from random-height blocks
 *   4s-xytz the 4s tower with the explicit height action level
 */
inline BlockWorldConfig builtin_task(const std::string& id) {
    BlockWorldConfig cfg;
    cfg.grid_w = cfg.grid_h = 8;
    cfg.crop = CropSpec{5, false};

    if (id == "2s") {
        cfg.mode = ActionMode::XY;
        cfg.inventory = {shape_spec(Shape::cube), shape_spec(Shape::cube)};
        cfg.goal = stack_goal(2);
        cfg.max_steps = 10;
    } else if (id == "4s") {
        cfg.mode = ActionMode::XY;
        cfg.inventory = std::vector<BlockSpec>(4, shape_spec(Shape::cube));
        cfg.goal = stack_goal(4);
        cfg.max_steps = 12;
    } else if (id == "h2") {
        cfg.mode = ActionMode::XYT;
        cfg.theta_count = 2;
        cfg.inventory = {shape_spec(Shape::cube), shape_spec(Shape::cube), shape_spec(Shape::roof)};
        cfg.goal.slots = {{Shape::cube, 0, 0, 0, 0, shape_spec(Shape::cube)},
                          {Shape::cube, 1, 0, 0, 0, shape_spec(Shape::cube)},
                          {Shape::roof, 0, 0, 1, 0, shape_spec(Shape::roof)}};
        cfg.max_steps = 10;
    } else if (id == "h4") {
        cfg.mode = ActionMode::XYT;
        cfg.theta_count = 2;
        cfg.inventory = std::vector<BlockSpec>(4, shape_spec(Shape::cube));
        cfg.inventory.push_back(shape_spec(Shape::roof));
        cfg.goal.slots = {{Shape::cube, 0, 0, 0, 0, shape_spec(Shape::cube)},
                          {Shape::cube, 1, 0, 0, 0, shape_spec(Shape::cube)},
                          {Shape::cube, 0, 0, 1, 0, shape_spec(Shape::cube)},
                          {Shape::cube, 1, 0, 1, 0, shape_spec(Shape::cube)},
                          {Shape::roof, 0, 0, 2, 0, shape_spec(Shape::roof)}};
        cfg.max_steps = 20;
    } else if (id == "imdis") {
        cfg.mode = ActionMode::XYT;
        cfg.theta_count = 2;
        cfg.inventory = std::vector<BlockSpec>(4, shape_spec(Shape::random_h));
        cfg.inventory.push_back(shape_spec(Shape::roof));
        cfg.goal.columns = {{0, 0, 2}, {1, 0, 2}};
        cfg.goal.slots = {{Shape::roof, 0, 0, 2, 0, shape_spec(Shape::roof)}};
        cfg.max_steps = 12;
    } else if (id == "4s-xytz") {
        cfg.mode = ActionMode::XYTZ;
        cfg.theta_count = 1;
        cfg.z_count = 4;
        cfg.crop = CropSpec{5, true};
        cfg.inventory = std::vector<BlockSpec>(4, shape_spec(Shape::cube));
        cfg.goal = stack_goal(4);
        cfg.max_steps = 12;
    } else {
        throw std::invalid_argument("unknown task '" + id + "' (try: 2s, 4s, h2, h4, imdis, 4s-xytz)");
    }
    cfg.validate();
    return cfg;
}

/// Plain-text task definition, one directive per line:
///   grid W H | mode xy|xyt|xytz | theta_count N | z_count N | max_steps N
///   crop M | noise A
///   block SHAPE W D H[,H2,...]
///   slot SHAPE RELX RELY ZBOTTOM THETA
///   column RELX RELY HEIGHT
/// Blank lines and lines starting with '#' are ignored.
inline BlockWorldConfig load_task(std::istream& is) {
    BlockWorldConfig cfg;
    cfg.inventory.clear();
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key.empty()) continue;
        if (key == "grid") {
            ls >> cfg.grid_w >> cfg.grid_h;
        } else if (key == "mode") {
            std::string m;
            ls >> m;
            if (m == "xy") cfg.mode = ActionMode::XY;
            else if (m == "xyt") cfg.mode = ActionMode::XYT;
            else if (m == "xytz") cfg.mode = ActionMode::XYTZ;
            else throw std::invalid_argument("load_task: bad mode '" + m + "'");
        } else if (key == "theta_count") {
            ls >> cfg.theta_count;
        } else if (key == "z_count") {
            ls >> cfg.z_count;
        } else if (key == "max_steps") {
            ls >> cfg.max_steps;
        } else if (key == "crop") {
            ls >> cfg.crop.m;
        } else if (key == "noise") {
            ls >> cfg.noise_amplitude;
        } else if (key == "block") {
            std::string shape, heights;
            BlockSpec b;
            ls >> shape >> b.w >> b.d >> heights;
            b.shape = shape_from_name(shape);
            std::istringstream hs(heights);
            std::string tok;
            std::vector<int> hv;
            while (std::getline(hs, tok, ',')) hv.push_back(std::stoi(tok));
            if (hv.empty()) throw std::invalid_argument("load_task: block without height");
            if (b.shape == Shape::random_h) {
                b.height_choices = hv;
                b.height = hv.front();
            } else {
                b.height = hv.front();
            }
            cfg.inventory.push_back(b);
        } else if (key == "slot") {
            std::string shape;
            GoalSlot s;
            ls >> shape >> s.rel_x >> s.rel_y >> s.z_bottom >> s.theta;
            s.shape = shape_from_name(shape);
            s.geometry = shape_spec(s.shape);
            cfg.goal.slots.push_back(s);
        } else if (key == "column") {
            SupportColumn c;
            ls >> c.rel_x >> c.rel_y >> c.height;
            cfg.goal.columns.push_back(c);
        } else {
            throw std::invalid_argument("load_task: unknown directive '" + key + "'");
        }
        if (!ls && !ls.eof()) throw std::invalid_argument("load_task: malformed line '" + line + "'");
    }
    cfg.crop.triple = cfg.mode == ActionMode::XYTZ;
    cfg.validate();
    return cfg;
}

inline void save_task(std::ostream& os, const BlockWorldConfig& cfg) {
    os << "grid " << cfg.grid_w << ' ' << cfg.grid_h << "\n";
    os << "mode " << mode_name(cfg.mode) << "\n";
    os << "theta_count " << cfg.theta_count << "\n";
    os << "z_count " << cfg.z_count << "\n";
    os << "max_steps " << cfg.max_steps << "\n";
    os << "crop " << cfg.crop.m << "\n";
    if (cfg.noise_amplitude > 0) os << "noise " << cfg.noise_amplitude << "\n";
    for (const BlockSpec& b : cfg.inventory) {
        os << "block " << shape_name(b.shape) << ' ' << b.w << ' ' << b.d << ' ';
        if (b.shape == Shape::random_h) {
            for (std::size_t i = 0; i < b.height_choices.size(); ++i)
                os << (i ? "," : "") << b.height_choices[i];
        } else {
            os << b.height;
        }
        os << "\n";
    }
    for (const GoalSlot& s : cfg.goal.slots)
        os << "slot " << shape_name(s.shape) << ' ' << s.rel_x << ' ' << s.rel_y << ' ' << s.z_bottom << ' '
           << s.theta << "\n";
    for (const SupportColumn& c : cfg.goal.columns)
        os << "column " << c.rel_x << ' ' << c.rel_y << ' ' << c.height << "\n";
}

/// Stable hash of the canonical task text; stamped into buffer files.
inline std::uint64_t task_hash(const BlockWorldConfig& cfg) {
    std::ostringstream ss;
    save_task(ss, cfg);
    const std::string s = ss.str();
    return fnv1a(s.data(), s.size());
}

} // namespace asrse3
