#pragma once

#include <Eigen/Dense>
#include <limits>
#include <optional>

#include "heatlab/space.hpp"

namespace heatlab {

struct LocalSpec {
    enum class Kind { none, nearest_neighbor } kind = Kind::none;
    double weight = 1.0;
    static LocalSpec none() { return {}; }
    static LocalSpec nearest_neighbor(double w) { return {Kind::nearest_neighbor, w}; }
};

struct JumpSpec {
    enum class Kind { none, stable, explicit_matrix } kind = Kind::none;
    double alpha = 1.0, beta = 1.0, scale = 1.0;  // stable kernel: J = scale * d^-(alpha+beta)
    Eigen::MatrixXd matrix;                       // explicit kernel
    static JumpSpec none() { return {}; }
    static JumpSpec stable(double alpha, double beta, double scale) {
        JumpSpec j;
        j.kind = Kind::stable;
        j.alpha = alpha;
        j.beta = beta;
        j.scale = scale;
        return j;
    }
    static JumpSpec explicit_matrix(Eigen::MatrixXd m) {
        JumpSpec j;
        j.kind = Kind::explicit_matrix;
        j.matrix = std::move(m);
        return j;
    }
};

// Symmetric Dirichlet form E = E^(L) + E^(J) on a finite space, without
// killing. The local part is a nearest-neighbor conductance form; the jump
// part has a symmetric density J(x,y) against mu x mu. Both parts use the
// ordered-pair convention: the double sum runs over all (x,y), no 1/2 factor.
class DirichletForm {
public:
    DirichletForm(SpacePtr space, Eigen::MatrixXd local_weights, Eigen::MatrixXd jump_density,
                  double rho = std::numeric_limits<double>::infinity());

    static DirichletForm assemble(SpacePtr space, const LocalSpec& local, const JumpSpec& jump);

    const MetricMeasureSpace& space() const { return *space_; }
    SpacePtr space_ptr() const { return space_; }
    int size() const { return space_->size(); }
    const Eigen::MatrixXd& local_weights() const { return local_; }
    const Eigen::MatrixXd& jump_density() const { return jump_; }
    double rho() const { return rho_; }
    bool has_jump() const { return has_jump_; }

    // E(u,v); dimension-checked.
    double energy(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
    double energy(const Eigen::VectorXd& u) const { return energy(u, u); }
    double local_energy(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
    double jump_energy(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;

    // Density gamma of the energy measure against mu: Gamma(u) = gamma * mu,
    // gamma(x) = gamma_L(x) + sum_y (u(x)-u(y))^2 J(x,y) mu(y).
    Eigen::VectorXd energy_density(const Eigen::VectorXd& u) const;
    // Signed density of Gamma(u,v) = (Gamma(u+v) - Gamma(u) - Gamma(v))/2.
    Eigen::VectorXd polarized_density(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
    // int u dGamma(v,w), evaluated as (E(uv,w) + E(v,uw) - E(vw,u))/2.
    double weighted_energy_integral(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                                    const Eigen::VectorXd& w) const;

    // Jump density zeroed on pairs with d(x,y) >= rho; rho = 0 keeps only the
    // local part.
    DirichletForm truncate(double rho) const;

    // sup_x of the integrated jump tail int_{d(x,y) >= rho} J(x,y) dmu(y).
    double jump_tail_mass(double rho) const;
    // sup of J(x,y) over pairs with d(x,y) >= rho.
    double sup_jump_beyond(double rho) const;

    // Matrix of the quadratic form: E(u,v) = u^T Q v.
    Eigen::MatrixXd quadratic_form_matrix() const;

    std::uint64_t content_hash() const;

private:
    SpacePtr space_;
    Eigen::MatrixXd local_;
    Eigen::MatrixXd jump_;
    double rho_;
    bool has_jump_ = false;
    // Combined symmetric coupling K = local + J .* (mu mu^T) and its row sums;
    // E(u,v) = 2 u^T (diag(k_row) - K) v.
    Eigen::MatrixXd coupling_;
    Eigen::VectorXd coupling_row_;
    Eigen::MatrixXd local_coupling_;
    Eigen::VectorXd local_row_;
};

struct JumpTailFit {
    double C_fit = 0.0;  // smallest C with tail(rho) <= C rho^-beta on the grid
    double worst_rho = 0.0;
    int grid_size = 0;
};

// Fits the constant in the tail bound tail(rho) <= C rho^-beta over a
// geometric rho-grid; the C5 surrogate for the Davies machinery.
JumpTailFit fit_jump_tail(const DirichletForm& form, double beta);

struct JumpUpperFit {
    double C_fit = 0.0;  // max of J(x,y) d(x,y)^(alpha+beta)
    int worst_x = -1, worst_y = -1;
    bool pass = true;  // finite on finite spaces
};

// Condition (J<=).
JumpUpperFit check_jump_upper(const DirichletForm& form, const SpaceParams& params);

}  // namespace heatlab
