#include "heatlab/davies.hpp"

#include <cmath>

namespace heatlab {

double oscillation(const MetricMeasureSpace& space, const Eigen::VectorXd& f, double rho) {
    if (rho < 0.0) fail(ErrorCode::invalid_argument, "oscillation needs rho >= 0");
    if (f.size() != space.size()) fail(ErrorCode::invalid_argument, "oscillation: dimension mismatch");
    double osc = 0.0;
    for (int x = 0; x < space.size(); ++x)
        for (int y = x + 1; y < space.size(); ++y)
            if (space.dist(x, y) <= rho) osc = std::max(osc, std::abs(f[y] - f[x]));
    return osc;
}

Eigen::VectorXd perturbed_semigroup(const SpectralGenerator& gen, const Eigen::VectorXd& psi,
                                    double t, const Eigen::VectorXd& f) {
    if (psi.size() != gen.domain_size() || f.size() != gen.domain_size())
        fail(ErrorCode::invalid_argument, "perturbed semigroup: dimension mismatch");
    if (t == 0.0) return f;
    Eigen::VectorXd damped = (-psi.array()).exp().matrix().cwiseProduct(f);
    return psi.array().exp().matrix().cwiseProduct(gen.apply(t, damped));
}

namespace {

double davies_gap_impl(const DirichletForm& form, const Eigen::VectorXd& psi,
                       const Eigen::VectorXd& f, double p, bool swap_sign) {
    if (p < 1.0) fail(ErrorCode::invalid_argument, "davies gap needs p >= 1");
    if ((f.array() < 0.0).any()) fail(ErrorCode::invalid_argument, "davies gap needs f >= 0");
    const double rho = form.rho();
    const double osc_cap = std::isfinite(rho) ? rho : form.space().diameter();
    const double lambda_psi = std::exp(2.0 * oscillation(form.space(), psi, osc_cap));

    Eigen::VectorXd e_psi = psi.array().exp().matrix();
    Eigen::VectorXd e_neg = (-psi.array()).exp().matrix();
    if (swap_sign) std::swap(e_psi, e_neg);
    Eigen::VectorXd f_p = f.array().pow(p).matrix();
    Eigen::VectorXd f_2p1 = f.array().pow(2.0 * p - 1.0).matrix();
    Eigen::VectorXd f_2p = f.array().pow(2.0 * p).matrix();

    double lhs = form.energy(e_neg.cwiseProduct(f), e_psi.cwiseProduct(f_2p1));
    Eigen::VectorXd gamma_psi = form.energy_density(psi);
    double weighted = f_2p.cwiseProduct(gamma_psi).dot(form.space().masses());
    double rhs = form.energy(f_p, f_p) / (2.0 * p) - 9.0 * p * lambda_psi * weighted;
    return lhs - rhs;
}

}  // namespace

double davies_gap(const DirichletForm& form, const Eigen::VectorXd& psi, const Eigen::VectorXd& f,
                  double p) {
    return davies_gap_impl(form, psi, f, p, false);
}

double davies_gap_adjoint(const DirichletForm& form, const Eigen::VectorXd& psi,
                          const Eigen::VectorXd& f, double p) {
    return davies_gap_impl(form, psi, f, p, true);
}

PerturbationLedger make_perturbation_ledger(const DirichletForm& form, const Eigen::VectorXd& psi,
                                            int max_k) {
    PerturbationLedger ledger;
    ledger.psi = psi;
    double cap = std::isfinite(form.rho()) ? form.rho() : form.space().diameter();
    ledger.osc_rho = oscillation(form.space(), psi, cap);
    ledger.Lambda = form.has_jump() ? std::exp(2.0 * ledger.osc_rho) : 1.0;
    for (int k = 0; k <= max_k; ++k) ledger.p_schedule.push_back(std::pow(2.0, k));
    return ledger;
}

double jump_branch_eta(double alpha, double beta) {
    // eta + 2 eta^2 = beta / (4 (beta+1)(alpha+beta))
    double q = beta / (4.0 * (beta + 1.0) * (alpha + beta));
    return (-1.0 + std::sqrt(1.0 + 8.0 * q)) / 4.0;
}

int averaging_parameter(double p, double lambda, double c2_eta, double C3) {
    double raw = 6.0 * p * lambda * std::exp(lambda * c2_eta) * std::sqrt(C3);
    if (raw > 1e9) fail(ErrorCode::invalid_argument, "averaging parameter overflow");
    return static_cast<int>(std::ceil(raw));
}

DaviesConfig choose_parameters(double alpha, double beta, double r, double t, DaviesBranch branch,
                               const MeasuredConstants& measured, const DaviesOverrides& overrides) {
    if (!(alpha > 0.0) || !(beta > 0.0) || !(r > 0.0) || !(t > 0.0))
        fail(ErrorCode::invalid_argument, "davies parameters need positive alpha, beta, r, t");
    DaviesConfig cfg;
    cfg.branch = branch;
    cfg.alpha = alpha;
    cfg.beta = beta;
    cfg.r = r;
    cfg.t = t;

    const double C6 = 9.0 * std::pow(12.0, 2.0 * beta) * measured.C4 * std::pow(measured.C3, beta);
    cfg.C0 = overrides.C0_override.value_or(measured.C5 + C6);
    cfg.C0_overridden = overrides.C0_override.has_value();
    const double r_beta_over_t = std::pow(r, beta) / t;

    if (branch == DaviesBranch::jump) {
        cfg.eta = jump_branch_eta(alpha, beta);
        cfg.c2 = cfg.eta + 2.0 * cfg.eta * cfg.eta;
        cfg.c1 = 2.0 * (beta + 1.0) * cfg.c2;
        // Guard (15): lambda >= 1/eta requires log(r^beta/t) >= beta/((alpha+beta) eta).
        cfg.regime_threshold =
            overrides.c2_threshold.value_or(std::exp(beta / ((alpha + beta) * cfg.eta)));
        if (r_beta_over_t < cfg.regime_threshold)
            fail(ErrorCode::out_of_regime,
                 "jump branch out of regime: r^beta/t below threshold (fall back to (DUE))");
        cfg.lambda = (alpha + beta) / beta * std::log(r_beta_over_t);
        cfg.rho = cfg.eta * r;
        cfg.T = std::exp(cfg.c1 * cfg.lambda) / std::pow(cfg.rho, beta);
    } else {
        cfg.eta = 0.5;
        cfg.c1 = 0.0;
        cfg.c2 = 0.0;
        cfg.rho = cfg.eta * r;
        cfg.T = 1.0 / std::pow(r, beta);
        cfg.regime_threshold =
            overrides.c4_threshold.value_or(std::pow(2.0, 2.0 * beta + 3.0) * cfg.C0);
        if (r_beta_over_t < cfg.regime_threshold)
            fail(ErrorCode::out_of_regime,
                 "local branch out of regime: r^beta/t below threshold (fall back to (DUE))");
        cfg.lambda = std::pow(std::pow(r, beta) / (4.0 * cfg.C0 * t), 1.0 / (2.0 * beta + 1.0));
    }
    if (cfg.lambda * cfg.eta < 1.0)
        fail(ErrorCode::out_of_regime, "davies parameters violate lambda >= 1/eta");
    cfg.K0 = cfg.T * cfg.C0 * std::pow(cfg.lambda, 2.0 * beta + 2.0);
    cfg.n = averaging_parameter(1.0, cfg.lambda, cfg.c2, measured.C3);
    return cfg;
}

double offdiag_bound(const DaviesConfig& config, double alpha, double beta, double R0, double d,
                     double t, const OffdiagConstants& constants, bool improved) {
    if (!(t > 0.0)) fail(ErrorCode::invalid_argument, "offdiag bound needs t > 0");
    const double on_diag =
        constants.C_due * std::pow(t, -alpha / beta) * std::exp(std::pow(R0, -beta) * t);
    if (d <= 0.0) return on_diag;
    if (config.branch == DaviesBranch::jump) {
        double tail = constants.C_off * std::exp(0.25 * std::pow(R0, -beta) * t) * t /
                      std::pow(d, alpha + beta);
        return std::min(on_diag, tail);
    }
    double beta_prime = improved ? beta : 2.0 * beta + 2.0;
    double expo = beta / (beta_prime - 1.0);
    double decay = std::exp(-std::pow(d / (constants.c_loc * std::pow(t, 1.0 / beta)), expo));
    return constants.C_off * std::pow(t, -alpha / beta) *
           std::exp(0.25 * std::pow(R0, -beta) * t) * decay;
}

TruncationComparison truncation_comparison(const DirichletForm& form, double rho,
                                           const std::vector<double>& times, double tol) {
    if (!(rho > 0.0) || rho > form.space().diameter())
        fail(ErrorCode::invalid_argument, "truncation comparison needs rho in (0, diam]");
    TruncationComparison result;
    result.sup_tail_jump = form.sup_jump_beyond(rho);
    DirichletForm truncated = form.truncate(rho);
    SpectralGenerator full(form);
    SpectralGenerator trunc(truncated);
    for (double t : times) {
        Eigen::MatrixXd p = full.kernel(t);
        Eigen::MatrixXd q = trunc.kernel(t);
        const double slack = 2.0 * t * result.sup_tail_jump;
        for (int x = 0; x < form.size(); ++x)
            for (int y = 0; y < form.size(); ++y) {
                double violation = p(x, y) - q(x, y) - slack;
                if (violation > result.max_violation) {
                    result.max_violation = violation;
                    result.worst_t = t;
                    result.worst_x = x;
                    result.worst_y = y;
                }
            }
    }
    result.pass = result.max_violation <= tol;
    return result;
}

}  // namespace heatlab
