// Copyright chainlab contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef CHAINLAB_CHAIN_GRAPH_HPP
#define CHAINLAB_CHAIN_GRAPH_HPP

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "chainlab/pseudo_orbit.hpp"
#include "chainlab/skew_product.hpp"
#include "chainlab/torus.hpp"

namespace chainlab {

using BoxIndex = std::uint32_t;

/// Uniform subdivision of T^3 into half-open cubes of side 1/resolution.
struct BoxGrid {
    int resolution = 0;

    explicit BoxGrid(int res) : resolution(res) {
        if (res < 2 || (res & (res - 1)) != 0)
            throw std::invalid_argument("grid resolution must be a power of two >= 2");
        if (res > 256)
            throw std::length_error("grid resolution capped at 2^8 (memory guard, <= 2^24 boxes)");
    }

    double side() const { return 1.0 / resolution; }
    double diameter() const { return std::sqrt(3.0) / resolution; }
    std::size_t size() const { return std::size_t(resolution) * resolution * resolution; }

    BoxIndex index_of(int ix, int iy, int iz) const {
        const int m = resolution - 1;
        ix &= m; iy &= m; iz &= m;
        return BoxIndex((std::size_t(iz) * resolution + iy) * resolution + ix);
    }

    void coords_of(BoxIndex b, int& ix, int& iy, int& iz) const {
        ix = int(b % resolution);
        iy = int((b / resolution) % resolution);
        iz = int(b / (std::size_t(resolution) * resolution));
    }

    BoxIndex box_of(const TorusPoint& p) const {
        const TorusPoint q = p.normalized();
        return index_of(int(q.base.x() * resolution), int(q.base.y() * resolution),
                        int(q.fiber * resolution));
    }

    TorusPoint center(BoxIndex b) const {
        int ix, iy, iz;
        coords_of(b, ix, iy, iz);
        const double h = side();
        return {(ix + 0.5) * h, (iy + 0.5) * h, (iz + 0.5) * h};
    }

    TorusPoint corner(BoxIndex b) const {
        int ix, iy, iz;
        coords_of(b, ix, iy, iz);
        const double h = side();
        return {ix * h, iy * h, iz * h};
    }
};

/// Box-transition graph: edge B -> B' iff
///   dist(f(center(B)), B') < eps + diam(B) * |Df|,
/// a sound one-sided over-approximation of the eps-step relation. Adjacency
/// is computed on demand; materializing it at resolution 128 would need
/// on the order of 1e9 edges.
class ChainGraph {
public:
    ChainGraph(const SkewProductSystem& sys, int resolution, double epsilon)
        : system_(sys), grid_(resolution), epsilon_(epsilon), dfNorm_(sys.df_norm_bound()) {
        if (!(epsilon_ > grid_.diameter()))
            throw std::invalid_argument("chain graph needs eps > box diameter (" +
                                        std::to_string(grid_.diameter()) + "), got " +
                                        std::to_string(epsilon_));
        radius_ = epsilon_ + grid_.diameter() * dfNorm_;
    }

    const SkewProductSystem& system() const { return system_; }
    const BoxGrid& grid() const { return grid_; }
    double epsilon() const { return epsilon_; }
    double inflation_radius() const { return radius_; }
    double df_norm() const { return dfNorm_; }

    TorusPoint image_of(BoxIndex b) const { return system_.apply(grid_.center(b)); }

    /// Distance from a point to the (closed) box, on the torus.
    double dist_to_box(const TorusPoint& q, BoxIndex b) const {
        int ix, iy, iz;
        grid_.coords_of(b, ix, iy, iz);
        const double h = grid_.side();
        auto axis = [h](double qc, int c) {
            const double lo = c * h, hi = (c + 1) * h;
            // Reduce q into the window around the cell, then clamp.
            const double qr = (lo + hi) / 2 + wrap_half(qc - (lo + hi) / 2);
            return (qr < lo) ? lo - qr : (qr > hi ? qr - hi : 0.0);
        };
        const TorusPoint qq = q.normalized();
        const double dx = axis(qq.base.x(), ix);
        const double dy = axis(qq.base.y(), iy);
        const double dz = axis(qq.fiber, iz);
        return std::sqrt(dx * dx + dy * dy + dz * dz);
    }

    bool has_edge(BoxIndex from, BoxIndex to) const {
        return dist_to_box(image_of(from), to) < radius_;
    }

    /// Enumerate out-neighbors of `from` into a callback(BoxIndex).
    template <typename F>
    void for_each_neighbor(BoxIndex from, F&& fn) const {
        const TorusPoint q = image_of(from);
        const int res = grid_.resolution;
        const double h = grid_.side();
        const double r2 = radius_ * radius_;
        const int lox = int(std::floor((q.base.x() - radius_) * res));
        const int hix = int(std::floor((q.base.x() + radius_) * res));
        const int loy = int(std::floor((q.base.y() - radius_) * res));
        const int hiy = int(std::floor((q.base.y() + radius_) * res));
        const int loz = int(std::floor((q.fiber - radius_) * res));
        const int hiz = int(std::floor((q.fiber + radius_) * res));
        for (int cx = lox; cx <= hix; ++cx) {
            const double dx = axis_dist(q.base.x(), cx, h);
            const double dx2 = dx * dx;
            if (dx2 >= r2) continue;
            for (int cy = loy; cy <= hiy; ++cy) {
                const double dy = axis_dist(q.base.y(), cy, h);
                const double p2 = dx2 + dy * dy;
                if (p2 >= r2) continue;
                for (int cz = loz; cz <= hiz; ++cz) {
                    const double dz = axis_dist(q.fiber, cz, h);
                    if (p2 + dz * dz < r2) fn(grid_.index_of(cx, cy, cz));
                }
            }
        }
    }

    std::vector<BoxIndex> neighbors(BoxIndex from) const {
        std::vector<BoxIndex> out;
        for_each_neighbor(from, [&](BoxIndex b) { out.push_back(b); });
        return out;
    }

    /// Strongly connected components (Tarjan, iterative with resumable
    /// neighbor cursors so adjacency is never stored). Returns the component
    /// id per box and the component count.
    std::pair<std::vector<std::int32_t>, int> strongly_connected_components() const {
        const std::size_t n = grid_.size();
        std::vector<std::uint32_t> index(n, 0), low(n, 0);
        std::vector<std::int32_t> comp(n, -1);
        std::vector<bool> onStack(n, false);
        std::vector<BoxIndex> sccStack;
        struct Frame {
            BoxIndex node;
            std::uint32_t cursor;
        };
        std::vector<Frame> call;
        std::uint32_t counter = 1;
        int comps = 0;

        struct Ranges {
            int lox, nx, loy, ny, loz, nz;
            double qx, qy, qz;
        };
        auto ranges_of = [&](BoxIndex b) {
            const TorusPoint q = image_of(b);
            const int res = grid_.resolution;
            Ranges rg;
            rg.qx = q.base.x(); rg.qy = q.base.y(); rg.qz = q.fiber;
            rg.lox = int(std::floor((rg.qx - radius_) * res));
            rg.nx = int(std::floor((rg.qx + radius_) * res)) - rg.lox + 1;
            rg.loy = int(std::floor((rg.qy - radius_) * res));
            rg.ny = int(std::floor((rg.qy + radius_) * res)) - rg.loy + 1;
            rg.loz = int(std::floor((rg.qz - radius_) * res));
            rg.nz = int(std::floor((rg.qz + radius_) * res)) - rg.loz + 1;
            return rg;
        };

        const double h = grid_.side();
        const double r2 = radius_ * radius_;

        for (BoxIndex root = 0; root < n; ++root) {
            if (index[root] != 0) continue;
            index[root] = low[root] = counter++;
            onStack[root] = true;
            sccStack.push_back(root);
            call.push_back({root, 0});

            while (!call.empty()) {
                Frame& fr = call.back();
                const BoxIndex v = fr.node;
                const Ranges rg = ranges_of(v);
                const std::uint32_t total = std::uint32_t(rg.nx) * rg.ny * rg.nz;
                bool descended = false;

                std::uint32_t cur = fr.cursor;
                int ox = int(cur / (std::uint32_t(rg.ny) * rg.nz));
                int rem = int(cur % (std::uint32_t(rg.ny) * rg.nz));
                int oy = rem / rg.nz;
                int oz = rem % rg.nz;

                for (; ox < rg.nx && !descended; ++ox, oy = 0) {
                    const double dx = axis_dist(rg.qx, rg.lox + ox, h);
                    const double dx2 = dx * dx;
                    if (dx2 >= r2) { cur += std::uint32_t(rg.ny - oy) * rg.nz - oz; oz = 0; continue; }
                    for (; oy < rg.ny && !descended; ++oy, oz = 0) {
                        const double dy = axis_dist(rg.qy, rg.loy + oy, h);
                        const double p2 = dx2 + dy * dy;
                        if (p2 >= r2) { cur += std::uint32_t(rg.nz - oz); continue; }
                        for (; oz < rg.nz; ++oz, ++cur) {
                            const double dz = axis_dist(rg.qz, rg.loz + oz, h);
                            if (p2 + dz * dz >= r2) continue;
                            const BoxIndex w = grid_.index_of(rg.lox + ox, rg.loy + oy, rg.loz + oz);
                            if (index[w] == 0) {
                                fr.cursor = cur + 1;
                                index[w] = low[w] = counter++;
                                onStack[w] = true;
                                sccStack.push_back(w);
                                call.push_back({w, 0});
                                descended = true;
                                ++oz; ++cur;
                                break;
                            }
                            if (onStack[w]) low[v] = std::min(low[v], index[w]);
                        }
                    }
                }
                if (descended) continue;
                (void)total;

                // v exhausted: close its component if it is a root.
                if (low[v] == index[v]) {
                    while (true) {
                        const BoxIndex w = sccStack.back();
                        sccStack.pop_back();
                        onStack[w] = false;
                        comp[w] = comps;
                        if (w == v) break;
                    }
                    ++comps;
                }
                call.pop_back();
                if (!call.empty()) low[call.back().node] = std::min(low[call.back().node], low[v]);
            }
        }
        return {std::move(comp), comps};
    }

    /// Covers of the chain classes: strongly connected components spanning at
    /// least two boxes, largest first. One-box components (including
    /// self-loops, which provably appear as inflation artifacts near the
    /// fixed point of the base map) are discretization noise and dropped.
    std::vector<std::vector<BoxIndex>> chain_recurrent_classes() const {
        auto [comp, comps] = strongly_connected_components();
        std::vector<std::uint32_t> count(comps, 0);
        for (auto c : comp) ++count[c];
        std::vector<std::int32_t> keep(comps, -1);
        int kept = 0;
        for (int c = 0; c < comps; ++c)
            if (count[c] >= 2) keep[c] = kept++;
        std::vector<std::vector<BoxIndex>> classes(kept);
        for (std::size_t b = 0; b < comp.size(); ++b)
            if (keep[comp[b]] >= 0) classes[keep[comp[b]]].push_back(BoxIndex(b));
        std::sort(classes.begin(), classes.end(),
                  [](const auto& a, const auto& b) { return a.size() > b.size(); });
        return classes;
    }

    bool strongly_connected() const {
        auto [comp, comps] = strongly_connected_components();
        (void)comp;
        return comps == 1;
    }

    /// Shortest box path from box(x) to box(y), returned as a pseudo-orbit
    /// through box centers, prepended with x and appended with y. The stored
    /// epsilon is the measured jump bound (the guaranteed bound is
    /// eps + diam * (3|Df| + 1) / 2). Empty result when y is not reachable.
    std::optional<PseudoOrbit> chain_attainable(const TorusPoint& x, const TorusPoint& y) const {
        // Direct step.
        if (torus_dist(system_.apply(x), y) < epsilon_) {
            PseudoOrbit po;
            po.points = {x.normalized(), y.normalized()};
            po.epsilon = std::max(torus_dist(system_.apply(x), y) * (1 + 1e-12), 1e-15);
            return po;
        }
        const BoxIndex start = grid_.box_of(x);
        const BoxIndex goal = grid_.box_of(y);
        const std::size_t n = grid_.size();
        constexpr BoxIndex kNone = 0xFFFFFFFFu;
        std::vector<BoxIndex> parent(n, kNone);
        std::deque<BoxIndex> queue;
        BoxIndex goalPred = kNone;

        // A path needs >= 1 edge (so x |- x asks for a cycle through box(x)).
        auto visit = [&](BoxIndex w, BoxIndex from) {
            if (goalPred != kNone) return;
            if (w == goal) {
                goalPred = from;
                return;
            }
            if (w != start && parent[w] == kNone) {
                parent[w] = from;
                queue.push_back(w);
            }
        };
        for_each_neighbor(start, [&](BoxIndex w) { visit(w, start); });
        while (!queue.empty() && goalPred == kNone) {
            const BoxIndex v = queue.front();
            queue.pop_front();
            for_each_neighbor(v, [&](BoxIndex w) { visit(w, v); });
        }
        if (goalPred == kNone) return std::nullopt;

        std::vector<BoxIndex> path;  // goal back to start
        path.push_back(goal);
        BoxIndex b = goalPred;
        while (b != start) {
            path.push_back(b);
            b = parent[b];
            if (b == kNone || path.size() > n + 2)
                throw std::logic_error("chain_attainable: path reconstruction failed");
        }
        path.push_back(start);
        std::reverse(path.begin(), path.end());

        PseudoOrbit po;
        po.points.push_back(x.normalized());
        for (std::size_t i = 1; i + 1 < path.size(); ++i) po.points.push_back(grid_.center(path[i]));
        po.points.push_back(y.normalized());
        po.epsilon = po.max_jump(system_) * (1 + 1e-12) + 1e-15;
        return po;
    }

    /// Same grid subdivided once more; eps is unchanged.
    ChainGraph refine() const { return ChainGraph(system_, grid_.resolution * 2, epsilon_); }

    /// CSV cover export: box index, class id, corner coordinates.
    void export_classes_csv(std::ostream& os) const {
        os << "box,class,corner_x,corner_y,corner_z\n";
        const auto classes = chain_recurrent_classes();
        for (std::size_t c = 0; c < classes.size(); ++c)
            for (BoxIndex b : classes[c]) {
                const TorusPoint p = grid_.corner(b);
                os << b << ',' << c << ',' << p.base.x() << ',' << p.base.y() << ',' << p.fiber
                   << '\n';
            }
    }

private:
    static double axis_dist(double q, int cell, double h) {
        const double lo = cell * h, hi = lo + h;
        // |q - cell| <= radius < 1/2 for every enumerated cell, so plain
        // (unwrapped) arithmetic is valid here.
        return (q < lo) ? lo - q : (q > hi ? q - hi : 0.0);
    }

    SkewProductSystem system_;
    BoxGrid grid_;
    double epsilon_;
    double dfNorm_;
    double radius_;
};

}  // namespace chainlab

#endif  // CHAINLAB_CHAIN_GRAPH_HPP
