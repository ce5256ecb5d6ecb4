#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "heatlab/common.hpp"

namespace heatlab {

struct SpaceParams {
    double alpha = 1.0;  // volume exponent
    double beta = 2.0;   // walk exponent
    void validate() const;
};

// Finite metric measure space: point set {0..n-1}, a metric given as a dense
// symmetric matrix, strictly positive point masses, and a localization radius
// R0 in (0, diam].
class MetricMeasureSpace {
public:
    MetricMeasureSpace(Eigen::MatrixXd dist, Eigen::VectorXd mass,
                       std::optional<double> r0 = std::nullopt);

    int size() const { return static_cast<int>(mass_.size()); }
    double dist(int x, int y) const { return dist_(x, y); }
    const Eigen::MatrixXd& dist_matrix() const { return dist_; }
    double mass(int x) const { return mass_[x]; }
    const Eigen::VectorXd& masses() const { return mass_; }
    double total_mass() const { return mass_.sum(); }
    double diameter() const { return diam_; }
    double r0() const { return r0_; }
    void set_r0(double r0);
    double min_positive_dist() const { return min_pos_; }

    // Open ball: { y : d(x,y) < r }.
    std::vector<int> ball(int x, double r) const;
    // V(x,r) = mu(B(x,r)).
    double volume(int x, double r) const;

    // Pairs at the minimal positive distance; the edge set carrying the
    // local-surrogate conductances.
    const std::vector<std::pair<int, int>>& nearest_neighbor_edges() const { return nn_edges_; }

    std::uint64_t content_hash() const;

private:
    Eigen::MatrixXd dist_;
    Eigen::VectorXd mass_;
    double diam_ = 0.0;
    double r0_ = 0.0;
    double min_pos_ = 0.0;
    std::vector<std::pair<int, int>> nn_edges_;  // unordered pairs, x < y
};

using SpacePtr = std::shared_ptr<const MetricMeasureSpace>;

// Generators. Graph-backed spaces use the shortest-path metric and unit masses.
SpacePtr build_cycle(int n);
SpacePtr build_path(int n);
SpacePtr build_torus(int n, int dims);
SpacePtr build_sierpinski(int level);
SpacePtr build_ultrametric(int depth, int arity);
SpacePtr build_explicit(Eigen::MatrixXd dist, Eigen::VectorXd mass,
                        std::optional<double> r0 = std::nullopt);

// Shortest-path metric of an undirected unit-weight graph (BFS per vertex).
Eigen::MatrixXd graph_metric(int n, const std::vector<std::pair<int, int>>& edges);

struct RegularityFit {
    double C_fit = 0.0;
    int worst_x = -1;
    double worst_r = 0.0;
    double grid_lo = 0.0, grid_hi = 0.0;
    double grid_ratio = 0.0;
    int grid_size = 0;
};

// Condition (V<=): fits the smallest C with V(x,r) <= C r^alpha over a
// geometric r-grid of ratio 2^(1/4) spanning [min positive distance, diam].
RegularityFit check_upper_regularity(const MetricMeasureSpace& space, double alpha);

}  // namespace heatlab
