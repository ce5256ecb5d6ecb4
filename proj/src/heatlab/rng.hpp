#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>

#include "heatlab/common.hpp"

namespace heatlab {

// Deterministic random stream. The engine sequence is fixed by the standard
// and the float conversions are done by hand, so identical seeds give
// identical draws on every platform.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : eng_(seed) {}

    double uniform() {  // [0, 1)
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(eng_() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double radius = std::sqrt(-2.0 * std::log(u1));
        cached_ = radius * std::sin(2.0 * M_PI * u2);
        have_cached_ = true;
        return radius * std::cos(2.0 * M_PI * u2);
    }

    Eigen::VectorXd uniform_vector(int n, double lo, double hi) {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v[i] = uniform(lo, hi);
        return v;
    }

    Eigen::VectorXd normal_vector(int n) {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v[i] = normal();
        return v;
    }

    // Independent child stream; used to shard randomized suites deterministically.
    RandomStream fork(std::uint64_t stream_id) {
        std::uint64_t base = eng_();
        return RandomStream(fnv1a(&stream_id, sizeof stream_id, base ^ 0x9e3779b97f4a7c15ULL));
    }

private:
    std::mt19937_64 eng_;
    bool have_cached_ = false;
    double cached_ = 0.0;
};

}  // namespace heatlab
