#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "asrse3/grid.hpp"

namespace asrse3 {

/// Crop geometry for the partial-action encodings. `m` must be odd so the
/// crop is centered on the action pixel; `triple` selects the three-view
/// projection output used once a height component has been chosen.
struct CropSpec {
    int m = 5;
    bool triple = false;

    void validate(int grid_w, int grid_h) const {
        if (m <= 0 || m % 2 == 0) throw std::invalid_argument("CropSpec: m must be odd and positive");
        if (m > std::min(grid_w, grid_h)) throw std::invalid_argument("CropSpec: m exceeds the grid");
    }
};

/// m x m crop of the scene centered at (ax, ay), zero-padded at borders.
inline HeightMap f2(const HeightMap& scene, int ax, int ay, int m) {
    if (!scene.in_bounds(ax, ay)) throw std::invalid_argument("f2: action pixel out of grid");
    HeightMap out(m, m, 0.0);
    const int r = m / 2;
    for (int y = 0; y < m; ++y)
        for (int x = 0; x < m; ++x) out.at(x, y) = scene.get_or(ax - r + x, ay - r + y, 0.0);
    return out;
}

/// Exact quarter-turn rotation of a square grid; q counts counterclockwise
/// quarter turns in image coordinates (x right, y down).
inline HeightMap rotate_quarters(const HeightMap& g, int q) {
    if (g.width() != g.height()) throw std::invalid_argument("rotate_quarters: grid not square");
    const int m = g.width();
    q = ((q % 4) + 4) % 4;
    if (q == 0) return g;
    HeightMap out(m, m, 0.0);
    for (int y = 0; y < m; ++y)
        for (int x = 0; x < m; ++x) {
            double v;
            switch (q) {
            case 1: v = g.at(m - 1 - y, x); break;          // 90 ccw
            case 2: v = g.at(m - 1 - x, m - 1 - y); break;  // 180
            default: v = g.at(y, m - 1 - x); break;         // 270 ccw == 90 cw
            }
            out.at(x, y) = v;
        }
    return out;
}

/// Nearest-neighbor rotation about the grid center for angles that are not
/// quarter turns. Occupancy semantics: cells falling outside read as zero.
inline HeightMap rotate_nn(const HeightMap& g, double radians) {
    if (g.width() != g.height()) throw std::invalid_argument("rotate_nn: grid not square");
    const int m = g.width();
    const double c = (m - 1) / 2.0;
    const double cs = std::cos(radians), sn = std::sin(radians);
    HeightMap out(m, m, 0.0);
    for (int y = 0; y < m; ++y)
        for (int x = 0; x < m; ++x) {
            // inverse-rotate the destination cell into the source frame;
            // y grows downward, so a positive angle appears counterclockwise
            const double dx = x - c, dy = y - c;
            const int sx = static_cast<int>(std::lround(c + cs * dx - sn * dy));
            const int sy = static_cast<int>(std::lround(c + sn * dx + cs * dy));
            out.at(x, y) = g.get_or(sx, sy, 0.0);
        }
    return out;
}

/// Crop centered at (ax, ay) rotated by -theta (theta in quarter turns):
/// the candidate grasp axis becomes the crop's canonical x axis. Exact for
/// the desk grid's quarter-turn orientation set.
inline HeightMap f3(const HeightMap& scene, int ax, int ay, int theta_quarters, int m) {
    return rotate_quarters(f2(scene, ax, ay, m), -theta_quarters);
}

/// m x m x m binary occupancy column-filled from a height crop: cell
/// (x, y, h) is occupied iff crop(x,y) > h + z_offset.
struct Occupancy {
    int m = 0;
    std::vector<char> cells; // x + m*(y + m*h)

    Occupancy() = default;
    explicit Occupancy(int m_) : m(m_), cells(static_cast<std::size_t>(m_) * m_ * m_, 0) {}
    char& at(int x, int y, int h) { return cells[x + static_cast<std::size_t>(m) * (y + static_cast<std::size_t>(m) * h)]; }
    char at(int x, int y, int h) const {
        return cells[x + static_cast<std::size_t>(m) * (y + static_cast<std::size_t>(m) * h)];
    }
    long long count() const {
        long long n = 0;
        for (char c : cells) n += c;
        return n;
    }
};

inline Occupancy voxelize(const HeightMap& crop, int z_offset) {
    const int m = crop.width();
    Occupancy occ(m);
    for (int y = 0; y < m; ++y)
        for (int x = 0; x < m; ++x)
            for (int h = 0; h < m; ++h)
                if (crop.at(x, y) > h + z_offset) occ.at(x, y, h) = 1;
    return occ;
}

/// Tilt about the crop's y axis as a voxel shear quantized to the nearest
/// cell: column x is lifted by round(tan(phi) * (x - center)). Voxels
/// sheared out of the window vanish.
inline Occupancy shear_phi(const Occupancy& occ, double phi) {
    if (phi == 0.0) return occ;
    const int m = occ.m;
    const double c = (m - 1) / 2.0;
    Occupancy out(m);
    for (int h = 0; h < m; ++h)
        for (int y = 0; y < m; ++y)
            for (int x = 0; x < m; ++x) {
                const int src_h = h + static_cast<int>(std::lround(std::tan(phi) * (x - c)));
                if (src_h >= 0 && src_h < m && occ.at(x, y, src_h)) out.at(x, y, h) = 1;
            }
    return out;
}

/// Orthographic projections of an occupancy grid along its z, y and x
/// axes. Every projection sums the same voxel set, so the three total
/// masses are equal by construction.
inline std::array<HeightMap, 3> project_occupancy(const Occupancy& occ) {
    const int m = occ.m;
    std::array<HeightMap, 3> out = {HeightMap(m, m, 0.0), HeightMap(m, m, 0.0), HeightMap(m, m, 0.0)};
    for (int h = 0; h < m; ++h)
        for (int y = 0; y < m; ++y)
            for (int x = 0; x < m; ++x)
                if (occ.at(x, y, h)) {
                    out[0].at(x, y) += 1.0;  // top view
                    out[1].at(x, h) += 1.0;  // front view (along y)
                    out[2].at(y, h) += 1.0;  // side view (along x)
                }
    return out;
}

/// Three-view encoding of the partial pose (a_xy, a_theta, a_z): the
/// rotated crop is voxelized with the height window starting at a_z.
inline std::array<HeightMap, 3> f4(const HeightMap& scene, int ax, int ay, int theta_quarters, int az, int m) {
    return project_occupancy(voxelize(f3(scene, ax, ay, theta_quarters, m), az));
}

/// f4 plus the phi tilt of the partial pose.
inline std::array<HeightMap, 3> f5(const HeightMap& scene, int ax, int ay, int theta_quarters, int az,
                                   double phi, int m) {
    return project_occupancy(shear_phi(voxelize(f3(scene, ax, ay, theta_quarters, m), az), phi));
}

/// In-hand encoding computed from the pre-pick scene at the pick pose.
/// Single mode: the rotated crop (one map). Triple mode: the three-view
/// projection at the pick height. The caller zeroes it after a place.
inline std::vector<HeightMap> in_hand_image(const HeightMap& pre_pick_scene, int ax, int ay,
                                            int theta_quarters, int az, const CropSpec& crop) {
    if (!crop.triple) return {f3(pre_pick_scene, ax, ay, theta_quarters, crop.m)};
    const auto p = f4(pre_pick_scene, ax, ay, theta_quarters, az, crop.m);
    return {p[0], p[1], p[2]};
}

inline std::vector<HeightMap> zero_in_hand(const CropSpec& crop) {
    return std::vector<HeightMap>(crop.triple ? 3 : 1, HeightMap(crop.m, crop.m, 0.0));
}

} // namespace asrse3
