#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "asrse3/rng.hpp"

namespace asrse3 {

/// Dense row-major 2D grid. (x, y) indexes column x of row y.
template <class T>
class Grid {
public:
    Grid() = default;
    Grid(int w, int h, T fill = T{}) : w_(w), h_(h), data_(static_cast<std::size_t>(w) * h, fill) {
        if (w < 0 || h < 0) throw std::invalid_argument("Grid: negative extent");
    }

    int width() const { return w_; }
    int height() const { return h_; }
    bool in_bounds(int x, int y) const { return x >= 0 && x < w_ && y >= 0 && y < h_; }

    T& at(int x, int y) { return data_[static_cast<std::size_t>(y) * w_ + x]; }
    const T& at(int x, int y) const { return data_[static_cast<std::size_t>(y) * w_ + x]; }

    /// Bounds-checked read; out-of-grid cells read as `pad`.
    T get_or(int x, int y, T pad) const { return in_bounds(x, y) ? at(x, y) : pad; }

    const std::vector<T>& data() const { return data_; }
    std::vector<T>& data() { return data_; }

    T sum() const {
        T s{};
        for (const T& v : data_) s += v;
        return s;
    }

    T max_value() const {
        T m{};
        for (const T& v : data_) m = std::max(m, v);
        return m;
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    bool operator==(const Grid&) const = default;

private:
    int w_ = 0, h_ = 0;
    std::vector<T> data_;
};

using HeightMap = Grid<double>;

inline std::uint64_t hash_grid(const HeightMap& g, std::uint64_t h = 0xcbf29ce484222325ULL) {
    h = fnv1a(&g, 0, h); // no-op keeps signature uniform
    const int w = g.width(), hh = g.height();
    h = fnv1a(&w, sizeof w, h);
    h = fnv1a(&hh, sizeof hh, h);
    if (!g.data().empty())
        h = fnv1a(g.data().data(), g.data().size() * sizeof(double), h);
    return h;
}

} // namespace asrse3
