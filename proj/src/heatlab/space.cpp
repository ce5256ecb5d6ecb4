#include "heatlab/space.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <map>
#include <set>

namespace heatlab {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void SpaceParams::validate() const {
    if (!(alpha > 0.0)) fail(ErrorCode::invalid_argument, "alpha must be > 0");
    if (!(beta > 0.0)) fail(ErrorCode::invalid_argument, "beta must be > 0");
}

MetricMeasureSpace::MetricMeasureSpace(Eigen::MatrixXd dist, Eigen::VectorXd mass,
                                       std::optional<double> r0)
    : dist_(std::move(dist)), mass_(std::move(mass)) {
    const int n = static_cast<int>(mass_.size());
    if (n < 1) fail(ErrorCode::invalid_argument, "space needs at least one point");
    if (dist_.rows() != n || dist_.cols() != n)
        fail(ErrorCode::invalid_argument, "dist matrix shape does not match mass vector");
    for (int i = 0; i < n; ++i) {
        if (!(mass_[i] > 0.0)) fail(ErrorCode::invalid_argument, "all masses must be positive");
        if (dist_(i, i) != 0.0) fail(ErrorCode::invalid_argument, "dist(x,x) must be 0");
    }
    min_pos_ = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (dist_(i, j) != dist_(j, i))
                fail(ErrorCode::invalid_argument, "dist matrix must be symmetric");
            if (!(dist_(i, j) > 0.0))
                fail(ErrorCode::invalid_argument, "dist(x,y) must be positive for x != y");
            diam_ = std::max(diam_, dist_(i, j));
            min_pos_ = std::min(min_pos_, dist_(i, j));
        }
    }
    if (n == 1) {
        diam_ = 0.0;
        min_pos_ = 0.0;
    }
    // Triangle inequality, exact up to a relative dust term for explicit input.
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                if (dist_(i, k) > dist_(i, j) + dist_(j, k) + 1e-12 * diam_)
                    fail(ErrorCode::invalid_argument, "triangle inequality violated");

    r0_ = diam_ > 0.0 ? diam_ : 1.0;

    const double nn_cut = min_pos_ * (1.0 + 1e-9);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (dist_(i, j) <= nn_cut) nn_edges_.emplace_back(i, j);
}

void MetricMeasureSpace::set_r0(double r0) {
    if (!(r0 > 0.0) || r0 > diam_ + 1e-12 * std::max(diam_, 1.0))
        fail(ErrorCode::invalid_argument, "R0 must lie in (0, diam]");
    r0_ = r0;
}

std::vector<int> MetricMeasureSpace::ball(int x, double r) const {
    if (!(r > 0.0)) fail(ErrorCode::invalid_argument, "ball radius must be positive");
    std::vector<int> out;
    for (int y = 0; y < size(); ++y)
        if (dist_(x, y) < r) out.push_back(y);
    return out;
}

double MetricMeasureSpace::volume(int x, double r) const {
    if (!(r > 0.0)) fail(ErrorCode::invalid_argument, "volume radius must be positive");
    double v = 0.0;
    for (int y = 0; y < size(); ++y)
        if (dist_(x, y) < r) v += mass_[y];
    return v;
}

std::uint64_t MetricMeasureSpace::content_hash() const {
    std::uint64_t h = fnv1a(dist_.data(), sizeof(double) * dist_.size());
    h = fnv1a(mass_.data(), sizeof(double) * mass_.size(), h);
    h = fnv1a(&r0_, sizeof r0_, h);
    return h;
}

Eigen::MatrixXd graph_metric(int n, const std::vector<std::pair<int, int>>& edges) {
    std::vector<std::vector<int>> adj(n);
    for (auto [a, b] : edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    Eigen::MatrixXd d(n, n);
    const double inf = std::numeric_limits<double>::infinity();
    for (int s = 0; s < n; ++s) {
        std::vector<double> level(n, inf);
        level[s] = 0.0;
        std::deque<int> queue{s};
        while (!queue.empty()) {
            int v = queue.front();
            queue.pop_front();
            for (int w : adj[v])
                if (level[w] == inf) {
                    level[w] = level[v] + 1.0;
                    queue.push_back(w);
                }
        }
        for (int t = 0; t < n; ++t) {
            if (level[t] == inf) fail(ErrorCode::invalid_argument, "generator graph is disconnected");
            d(s, t) = level[t];
        }
    }
    return d;
}

namespace {

SpacePtr from_graph(int n, const std::vector<std::pair<int, int>>& edges) {
    return std::make_shared<MetricMeasureSpace>(graph_metric(n, edges), Eigen::VectorXd::Ones(n));
}

}  // namespace

SpacePtr build_cycle(int n) {
    if (n < 2) fail(ErrorCode::invalid_argument, "cycle needs n >= 2");
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
    return from_graph(n, edges);
}

SpacePtr build_path(int n) {
    if (n < 2) fail(ErrorCode::invalid_argument, "path needs n >= 2");
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
    return from_graph(n, edges);
}

SpacePtr build_torus(int n, int dims) {
    if (n < 2 || dims < 1) fail(ErrorCode::invalid_argument, "torus needs n >= 2, dims >= 1");
    int total = 1;
    for (int d = 0; d < dims; ++d) {
        if (total > 1 << 20) fail(ErrorCode::invalid_argument, "torus is too large");
        total *= n;
    }
    auto coord = [&](int idx, int axis) {
        for (int a = 0; a < axis; ++a) idx /= n;
        return idx % n;
    };
    std::vector<std::pair<int, int>> edges;
    for (int v = 0; v < total; ++v) {
        int stride = 1;
        for (int a = 0; a < dims; ++a) {
            int c = coord(v, a);
            int w = v + ((c + 1) % n - c) * stride;
            edges.emplace_back(v, w);
            stride *= n;
        }
    }
    return from_graph(total, edges);
}

// Level 1 is a single triangle; each next level glues three copies of the
// previous one at the outer corner vertices.
SpacePtr build_sierpinski(int level) {
    if (level < 1) fail(ErrorCode::invalid_argument, "sierpinski level must be >= 1");
    if (level > 8) fail(ErrorCode::invalid_argument, "sierpinski level too large for dense storage");

    struct Frac {
        std::map<std::pair<long long, long long>, int> index;
        std::vector<std::pair<long long, long long>> points;
        std::set<std::pair<int, int>> edges;
        int at(long long x, long long y) {
            auto key = std::make_pair(x, y);
            auto it = index.find(key);
            if (it != index.end()) return it->second;
            int id = static_cast<int>(points.size());
            index.emplace(key, id);
            points.push_back(key);
            return id;
        }
        void edge(int a, int b) { edges.insert({std::min(a, b), std::max(a, b)}); }
    } g;

    // Integer coordinates: a unit upward triangle sits at ((x,y),(x+2,y),(x+1,y+1)),
    // y counting rows. Copies are translated by the current assembly size.
    std::vector<std::pair<long long, long long>> tris{{0, 0}};
    long long rows = 1;
    for (int l = 1; l < level; ++l) {
        std::vector<std::pair<long long, long long>> next;
        for (auto [x, y] : tris) {
            next.emplace_back(x, y);
            next.emplace_back(x + 2 * rows, y);
            next.emplace_back(x + rows, y + rows);
        }
        tris = std::move(next);
        rows *= 2;
    }
    for (auto [x, y] : tris) {
        int a = g.at(x, y);
        int b = g.at(x + 2, y);
        int c = g.at(x + 1, y + 1);
        g.edge(a, b);
        g.edge(a, c);
        g.edge(b, c);
    }
    std::vector<std::pair<int, int>> edges(g.edges.begin(), g.edges.end());
    return from_graph(static_cast<int>(g.points.size()), edges);
}

// Leaves of a complete arity-ary tree; d(x,y) = 2^(level of lowest common
// ancestor counted from the leaves). Strong triangle inequality holds.
SpacePtr build_ultrametric(int depth, int arity) {
    if (depth < 1 || arity < 2) fail(ErrorCode::invalid_argument, "ultrametric needs depth >= 1, arity >= 2");
    long long n = 1;
    for (int d = 0; d < depth; ++d) {
        n *= arity;
        if (n > (1 << 20)) fail(ErrorCode::invalid_argument, "ultrametric space too large");
    }
    const int size = static_cast<int>(n);
    Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(size, size);
    for (int i = 0; i < size; ++i)
        for (int j = i + 1; j < size; ++j) {
            int a = i, b = j, lvl = 0;
            while (a != b) {
                a /= arity;
                b /= arity;
                ++lvl;
            }
            dist(i, j) = dist(j, i) = std::pow(2.0, lvl);
        }
    return std::make_shared<MetricMeasureSpace>(std::move(dist), Eigen::VectorXd::Ones(size));
}

SpacePtr build_explicit(Eigen::MatrixXd dist, Eigen::VectorXd mass, std::optional<double> r0) {
    auto s = std::make_shared<MetricMeasureSpace>(std::move(dist), std::move(mass));
    if (r0) {
        auto copy = std::make_shared<MetricMeasureSpace>(s->dist_matrix(), s->masses());
        copy->set_r0(*r0);
        return copy;
    }
    return s;
}

RegularityFit check_upper_regularity(const MetricMeasureSpace& space, double alpha) {
    if (!(alpha > 0.0)) fail(ErrorCode::invalid_argument, "alpha must be > 0");
    RegularityFit fit;
    fit.grid_ratio = std::pow(2.0, 0.25);
    fit.grid_lo = space.min_positive_dist();
    fit.grid_hi = space.diameter();
    if (!(fit.grid_lo > 0.0)) {  // single-point space
        fit.C_fit = space.total_mass();
        return fit;
    }
    std::vector<double> grid;
    for (double r = fit.grid_lo; r < fit.grid_hi * (1.0 + 1e-12); r *= fit.grid_ratio) grid.push_back(r);
    if (grid.empty() || grid.back() < fit.grid_hi) grid.push_back(fit.grid_hi);
    fit.grid_size = static_cast<int>(grid.size());
    for (int x = 0; x < space.size(); ++x) {
        for (double r : grid) {
            double ratio = space.volume(x, r) / std::pow(r, alpha);
            if (ratio > fit.C_fit) {
                fit.C_fit = ratio;
                fit.worst_x = x;
                fit.worst_r = r;
            }
        }
    }
    return fit;
}

}  // namespace heatlab
