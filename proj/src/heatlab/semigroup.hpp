#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "heatlab/forms.hpp"

namespace heatlab {

// Generator matrix L of a form: E(u,v) = -<Lu, v>_mu, i.e.
// (Lu)(x) = sum_y (u(y)-u(x)) (2 w_xy / mu(x) + 2 J(x,y) mu(y)).
Eigen::MatrixXd generator_matrix(const DirichletForm& form);

// Dense eigendecomposition of the measure-symmetrized generator
// S = D^(1/2) L D^(-1/2), D = diag(mu). Computed once, reused for every t.
// An optional domain restricts L to rows/columns in Omega (Dirichlet
// condition), giving the killed semigroup.
class SpectralGenerator {
public:
    explicit SpectralGenerator(const DirichletForm& form);
    SpectralGenerator(const DirichletForm& form, const std::vector<int>& domain);

    int domain_size() const { return static_cast<int>(domain_.size()); }
    const std::vector<int>& domain() const { return domain_; }
    bool whole_space() const { return whole_space_; }

    // Heat kernel p_t(x,y) on the domain, density against mu on both slots.
    // Entries in [-1e-12, 0) are clamped to zero; anything more negative is a
    // numeric error.
    Eigen::MatrixXd kernel(double t) const;
    // e^{tL} f for f given on the domain.
    Eigen::VectorXd apply(double t, const Eigen::VectorXd& f) const;
    // w = (lam - L)^(-1) 1 on the domain (the resolvent of the indicator).
    Eigen::VectorXd resolvent_of_one(double lam) const;

    const Eigen::VectorXd& domain_masses() const { return mu_; }

    // Smallest nonzero -eigenvalue (used to detect the mixing time).
    double spectral_gap() const;
    double min_eigenvalue() const { return eigenvalues_.minCoeff(); }

    long clamped_entries() const { return clamped_; }

private:
    void decompose(const DirichletForm& form);

    std::vector<int> domain_;
    bool whole_space_ = true;
    Eigen::VectorXd mu_;        // masses on the domain
    Eigen::VectorXd sqrt_mu_;
    Eigen::VectorXd eigenvalues_;   // of S, all <= 0 up to roundoff
    Eigen::MatrixXd eigenvectors_;  // orthonormal columns
    mutable long clamped_ = 0;
};

// p_t tables over a sorted positive time grid, with the domain they were
// computed on (whole space, or a ball for killed kernels).
class HeatKernelTable {
public:
    HeatKernelTable(std::vector<double> times, std::vector<Eigen::MatrixXd> kernels,
                    std::vector<int> domain, std::uint64_t form_hash);

    int num_times() const { return static_cast<int>(times_.size()); }
    double time(int i) const { return times_[i]; }
    const std::vector<double>& times() const { return times_; }
    const Eigen::MatrixXd& kernel(int i) const { return kernels_[i]; }
    double value(int time_index, int x, int y) const { return kernels_[time_index](x, y); }
    const std::vector<int>& domain() const { return domain_; }
    int domain_size() const { return static_cast<int>(domain_.size()); }
    std::uint64_t form_hash() const { return form_hash_; }

    void write_csv(const std::string& path) const;  // columns: t,x,y,p

    // Binary cache keyed by the content hash of the form and the time grid.
    void save_binary(const std::string& path) const;
    static std::optional<HeatKernelTable> load_binary(const std::string& path);
    std::uint64_t cache_key() const;

private:
    std::vector<double> times_;
    std::vector<Eigen::MatrixXd> kernels_;
    std::vector<int> domain_;
    std::uint64_t form_hash_ = 0;
};

HeatKernelTable heat_kernel(const DirichletForm& form, const std::vector<double>& times);
HeatKernelTable heat_kernel(const SpectralGenerator& gen, const std::vector<double>& times,
                            std::uint64_t form_hash);

// e^{t L^Omega} f, f given on Omega (extended by zero outside).
Eigen::VectorXd killed_semigroup(const DirichletForm& form, const std::vector<int>& omega, double t,
                                 const Eigen::VectorXd& f_on_omega);

// Solves (lam - L^Omega) w = 1 on Omega; returned on the whole space,
// extended by zero.
Eigen::VectorXd resolvent(const DirichletForm& form, const std::vector<int>& omega, double lam);

// The t-approximation of the form:
// E^(t)(u,v) = (1/2t) sum (u(x)-u(y))(v(x)-v(y)) p_t(x,y) mu(y) mu(x)
//            + (1/t) sum u v (1 - P_t 1) mu.
double approximating_form(const SpectralGenerator& gen, double t, const Eigen::VectorXd& u,
                          const Eigen::VectorXd& v);

struct SurvivalCheck {
    bool pass = false;
    bool vacuous = false;    // quarter ball empty (flagged, counts as pass)
    double worst = 0.0;      // max over the grid of 1 - P_t^B 1_B on (1/4)B
    double worst_t = 0.0;
    double eps = 0.0, delta = 0.0;
    int ball_size = 0, quarter_size = 0;
};

// Condition (S) on the ball B(center, r): evaluates 1 - P_t^B 1_B on (1/4)B
// over a t-grid with t^(1/beta) <= delta r; passes iff the max stays <= eps.
SurvivalCheck check_survival(const DirichletForm& form, int center, double r, double eps,
                             double delta, double beta, int grid_size = 16);

}  // namespace heatlab
