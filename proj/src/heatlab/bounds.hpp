#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "heatlab/rng.hpp"
#include "heatlab/semigroup.hpp"

namespace heatlab {

// Fitting window. Discrete kernels match continuum envelopes only away from
// the lattice scale and before the spectral gap flattens everything, so every
// fit records the window it used.
struct FitWindow {
    double t_lo = 0.0;
    double t_hi = std::numeric_limits<double>::infinity();
    double d_exclude_below = 0.0;  // drop pairs with 0 < d <= this
    double s_max = std::numeric_limits<double>::infinity();  // cap on d / t^(1/beta)
};

// Window from the spectral gap (saturation at t ~ 1/gap) and the lattice step.
FitWindow default_window(const SpectralGenerator& gen, const MetricMeasureSpace& space,
                         double beta);

struct BoundFit {
    std::string condition;
    double C = 0.0;
    double c = 0.0;              // scale parameter (UE_loc only)
    FitWindow window;
    double residual = 0.0;       // half-spread of the log-ratio over the window
    bool shape_match = false;    // residual within the log-envelope tolerance
    bool pass = false;           // fitted constant finite over the window
    double stability_ratio = 1.0;  // per-half-window C ratio (max/min)
    int points = 0;
};

// Half-spread tolerance in log units for calling a shape matched.
inline constexpr double kLogEnvelopeTolerance = 0.1;

// (DUE): C = max p_t(x,x) t^(a/b) e^(-R0^-b t) over the window.
BoundFit check_due(const HeatKernelTable& table, const MetricMeasureSpace& space, double alpha,
                   double beta, double R0, const FitWindow& window);

// (UE): as check_due with the envelope (1 + d/t^(1/b))^-(a+b).
BoundFit check_ue(const HeatKernelTable& table, const MetricMeasureSpace& space, double alpha,
                  double beta, double R0, const FitWindow& window);

// (UE_loc): Chebyshev fit of (C, c) in the envelope
//   C t^(-a/b) e^(R0^-b t) exp(-(d/(c t^(1/b)))^(b/(b-1))),
// minimizing the max |log violation|; passes iff the residual stays within
// the log-envelope tolerance. Requires beta > 1.
BoundFit check_ue_loc(const HeatKernelTable& table, const MetricMeasureSpace& space, double alpha,
                      double beta, double R0, const FitWindow& window);

struct NashFit {
    double C_N_fit = 0.0;
    double worst_ratio_kind = 0.0;  // 0 random, 1 eigenvector, 2 closed-form probe
    double due_C_input = 0.0;
    int samples = 0;
};

// Nash inequality constant: max over probes of
//   ||u||_2^(2(1+b/a)) / [ (E(u) + R0^-b ||u||_2^2) ||u||_1^(2b/a) ].
NashFit check_nash(const DirichletForm& form, double alpha, double beta, double R0, double due_C,
                   RandomStream& rng, int samples = 200);

// Nondecreasing positive step function, w(t) = value of the last breakpoint
// at or before t (first value before that).
struct StepFunction {
    std::vector<double> knots;   // sorted
    std::vector<double> values;  // same length, positive, nondecreasing
    double operator()(double t) const;
    void validate() const;
};

// Closed-form right side of the F-S lemma: (2 p^nu/(theta b))^(1/theta)
// t^(-(p-1)/theta) e^(K p^-nu t) w(t). K = 0 admitted as the K -> 0 limit.
double fs_bound(double b, double p, double theta, double K, double nu, const StepFunction& w,
                double t);

struct FsInstance {
    double b = 1.0, p = 2.0, theta = 1.0, K = 0.0, nu = 1.0;
    StepFunction w;
    double u0 = 1.0;
    double t_end = 10.0;
};

struct FsResult {
    bool pass = false;
    double min_margin = 0.0;  // min over the grid of bound/u
    double max_ratio = 0.0;   // max over the grid of u/bound
    int steps = 0;
    int halvings = 0;
};

// Integrates the equality case of u' = -b t^(p-2) u^(1+theta)/w^theta + K u
// (which dominates every admissible u) with a 4th-order fixed-step scheme and
// checks u(t) <= fs_bound * (1 + 1e-6) along the grid.
FsResult verify_fs(const FsInstance& instance);

// Exponent self-improvement schedule: theta_j = beta/(beta'_j - 1) with
// beta' dropping by 1 while beta' >= beta + 1; a landing inside
// (beta, beta+1) is weakened to beta' = beta + 1 (theta = 1); the final
// entry is the terminal exponent beta/(beta - 1).
std::vector<double> improvement_schedule(double beta, double beta_prime0);

// (P_t E_{t,x}) with E_{t,x}(y) = exp(a (d(x,y)/t^(1/b))^theta), maximized
// over the quarter ball of B(x, 2 t^(1/b)/delta). Diagnostic, reported
// against the A1-type cap.
struct WeightedTailMass {
    double max_raw = 0.0;         // max P_t E over the quarter ball
    double max_normalized = 0.0;  // divided by e^(R0^-b t)
    int quarter_size = 0;
};
WeightedTailMass weighted_tail_mass(const SpectralGenerator& gen, const MetricMeasureSpace& space,
                                    int x, double t, double a, double theta, double beta,
                                    double R0, double delta = 0.5);

struct TailExponentFit {
    double theta_hat = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    int points = 0;
    bool flagged_non_exponential = false;
    std::string note;
};

// Discriminates exponential-type tails from polynomial ones: regresses
// log(-log(p_t(x,y) t^(a/b) / C)) against log(d/t^(1/b)) in the far field.
// Exponential tails give a clean line of slope b/(b-1); polynomial tails
// curve logarithmically and are flagged by low R^2 / flat slope.
TailExponentFit tail_exponent_fit(const HeatKernelTable& table, const MetricMeasureSpace& space,
                                  double alpha, double beta, const FitWindow& window,
                                  double s_min = 2.0);

// Tables generated from the envelope formulas themselves; checker self-tests.
HeatKernelTable synthetic_table_ue(const MetricMeasureSpace& space, const std::vector<double>& times,
                                   double alpha, double beta, double R0, double C);
HeatKernelTable synthetic_table_ue_loc(const MetricMeasureSpace& space,
                                       const std::vector<double>& times, double alpha, double beta,
                                       double R0, double C, double c);

}  // namespace heatlab
