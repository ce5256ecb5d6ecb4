#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "heatlab/semigroup.hpp"

namespace heatlab {

// osc(f, rho) = sup |f(y) - f(x)| over pairs with d(x,y) <= rho.
double oscillation(const MetricMeasureSpace& space, const Eigen::VectorXd& f, double rho);

// Q_t^psi f = e^psi Q_t(e^-psi f) for the (possibly truncated) form behind gen.
Eigen::VectorXd perturbed_semigroup(const SpectralGenerator& gen, const Eigen::VectorXd& psi,
                                    double t, const Eigen::VectorXd& f);

// Slack of the Davies energy inequality:
//   E_rho(e^-psi f, e^psi f^(2p-1)) - [ (1/2p) E_rho(f^p) - 9p Lambda_psi int f^2p dGamma_rho(psi) ].
// Nonnegative for every psi, f >= 0, p >= 1. Discrete forms are jump forms,
// so Lambda_psi = e^(2 osc(psi, rho)) throughout.
double davies_gap(const DirichletForm& form, const Eigen::VectorXd& psi, const Eigen::VectorXd& f,
                  double p);
// The Remark-R11 variant with the roles of e^psi and e^-psi exchanged.
double davies_gap_adjoint(const DirichletForm& form, const Eigen::VectorXd& psi,
                          const Eigen::VectorXd& f, double p);

struct PerturbationLedger {
    Eigen::VectorXd psi;
    double osc_rho = 0.0;
    double Lambda = 1.0;            // e^(2 osc) for jump forms, 1 when J == 0
    std::vector<double> p_schedule;  // p_k = 2^k
};

PerturbationLedger make_perturbation_ledger(const DirichletForm& form, const Eigen::VectorXd& psi,
                                            int max_k = 8);

enum class DaviesBranch { jump, local };

struct MeasuredConstants {
    double C3 = 1.0;  // from (eq:CSA_strong); C3 >= 1 by the paper
    double C4 = 1.0;
    double C5 = 0.0;  // jump tail fit; 0 when J == 0
};

struct DaviesOverrides {
    std::optional<double> c2_threshold;  // regime guard (15): r^beta / t >= c2
    std::optional<double> c4_threshold;  // local regime guard: r^beta >= c4 t
    std::optional<double> C0_override;
};

struct DaviesConfig {
    DaviesBranch branch = DaviesBranch::jump;
    double alpha = 0.0, beta = 0.0;
    double r = 0.0, t = 0.0;
    double eta = 0.0;     // truncation ratio
    double lambda = 0.0;  // perturbation amplitude, lambda >= 1/eta
    double rho = 0.0;     // eta * r
    double c1 = 0.0, c2 = 0.0;
    double T = 0.0;       // rate factor
    double C0 = 0.0;      // C5 + C6 unless overridden
    double K0 = 0.0;      // T C0 lambda^(2 beta + 2)
    int n = 1;            // averaging parameter at p = 1
    double regime_threshold = 0.0;  // the guard actually applied
    bool C0_overridden = false;
};

// Positive root of 4(beta+1)(eta + 2 eta^2) = beta/(alpha+beta), the jump
// branch's truncation ratio.
double jump_branch_eta(double alpha, double beta);

// n = ceil(6 p lambda exp(lambda c2(eta)) sqrt(C3)).
int averaging_parameter(double p, double lambda, double c2_eta, double C3);

// Davies parameter selection. Jump branch: lambda = ((alpha+beta)/beta)
// log(r^beta/t) with eta from the fixed-point equation; local branch:
// eta = 1/2 and lambda = (r^beta/(4 C0 t))^(1/(2 beta + 1)). Throws
// out_of_regime when the guard (15) (or its local analogue) fails; callers
// fall back to (DUE) exactly as the argument does for d < c3 t^(1/beta).
DaviesConfig choose_parameters(double alpha, double beta, double r, double t, DaviesBranch branch,
                               const MeasuredConstants& measured = {},
                               const DaviesOverrides& overrides = {});

struct OffdiagConstants {
    double C_due = 1.0;  // on-diagonal cap constant
    double C_off = 1.0;  // off-diagonal envelope constant
    double c_loc = 1.0;  // scale inside the local exponential
};

// Predicted off-diagonal upper bound value at distance d and time t.
// Jump branch: min of the on-diagonal cap C_due t^(-a/b) e^(R0^-b t) and the
// tail envelope C_off e^(R0^-b t / 4) t d^-(a+b). Local branch: the
// sub-Gaussian shape with beta' = 2 beta + 2 before self-improvement and
// beta' = beta after.
double offdiag_bound(const DaviesConfig& config, double alpha, double beta, double R0, double d,
                     double t, const OffdiagConstants& constants, bool improved = true);

struct TruncationComparison {
    double max_violation = -std::numeric_limits<double>::infinity();
    double sup_tail_jump = 0.0;  // sup of J beyond rho
    double worst_t = 0.0;
    int worst_x = -1, worst_y = -1;
    bool pass = false;
};

// Verifies p_t(x,y) <= q_t^(rho)(x,y) + 2t sup_{d >= rho} J pointwise over
// the time grid; the comparison step of the truncation argument.
TruncationComparison truncation_comparison(const DirichletForm& form, double rho,
                                           const std::vector<double>& times, double tol = 1e-9);

}  // namespace heatlab
