#include "heatlab/forms.hpp"

#include <cmath>

namespace heatlab {

namespace {

void check_kernel_matrix(const Eigen::MatrixXd& m, int n, const char* what) {
    if (m.rows() != n || m.cols() != n) fail(ErrorCode::invalid_argument, std::string(what) + ": bad shape");
    for (int i = 0; i < n; ++i) {
        if (m(i, i) != 0.0) fail(ErrorCode::invalid_argument, std::string(what) + ": diagonal must be zero");
        for (int j = i + 1; j < n; ++j) {
            if (m(i, j) != m(j, i)) fail(ErrorCode::invalid_argument, std::string(what) + ": must be symmetric");
            if (m(i, j) < 0.0) fail(ErrorCode::invalid_argument, std::string(what) + ": must be nonnegative");
        }
    }
}

}  // namespace

DirichletForm::DirichletForm(SpacePtr space, Eigen::MatrixXd local_weights,
                             Eigen::MatrixXd jump_density, double rho)
    : space_(std::move(space)), local_(std::move(local_weights)), jump_(std::move(jump_density)), rho_(rho) {
    const int n = space_->size();
    check_kernel_matrix(local_, n, "local weights");
    check_kernel_matrix(jump_, n, "jump density");
    if (rho_ < 0.0) fail(ErrorCode::invalid_argument, "rho must be >= 0");
    if (std::isfinite(rho_)) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j && space_->dist(i, j) >= rho_ && jump_(i, j) != 0.0)
                    fail(ErrorCode::invalid_argument, "jump density must vanish at or beyond rho");
    }
    has_jump_ = jump_.cwiseAbs().sum() > 0.0;

    const Eigen::VectorXd& mu = space_->masses();
    coupling_ = local_ + jump_.cwiseProduct(mu * mu.transpose());
    coupling_row_ = coupling_.rowwise().sum();
    local_coupling_ = local_;
    local_row_ = local_.rowwise().sum();
}

DirichletForm DirichletForm::assemble(SpacePtr space, const LocalSpec& local, const JumpSpec& jump) {
    const int n = space->size();
    if (local.kind == LocalSpec::Kind::none && jump.kind == JumpSpec::Kind::none)
        fail(ErrorCode::invalid_argument, "form needs a local part, a jump part, or both");

    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    if (local.kind == LocalSpec::Kind::nearest_neighbor) {
        if (local.weight < 0.0) fail(ErrorCode::invalid_argument, "local weight must be nonnegative");
        for (auto [a, b] : space->nearest_neighbor_edges()) w(a, b) = w(b, a) = local.weight;
    }

    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
    switch (jump.kind) {
        case JumpSpec::Kind::none:
            break;
        case JumpSpec::Kind::stable: {
            if (jump.scale < 0.0) fail(ErrorCode::invalid_argument, "stable kernel scale must be nonnegative");
            const double expo = jump.alpha + jump.beta;
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b)
                    if (a != b) j(a, b) = jump.scale * std::pow(space->dist(a, b), -expo);
            break;
        }
        case JumpSpec::Kind::explicit_matrix:
            j = jump.matrix;
            break;
    }
    return DirichletForm(std::move(space), std::move(w), std::move(j));
}

double DirichletForm::energy(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    if (u.size() != size() || v.size() != size())
        fail(ErrorCode::invalid_argument, "energy: dimension mismatch");
    // sum_{x,y} (u(x)-u(y))(v(x)-v(y)) K_xy = 2 u^T (diag(rowsum) - K) v
    return 2.0 * (u.dot(coupling_row_.cwiseProduct(v)) - u.dot(coupling_ * v));
}

double DirichletForm::local_energy(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    return 2.0 * (u.dot(local_row_.cwiseProduct(v)) - u.dot(local_coupling_ * v));
}

double DirichletForm::jump_energy(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    return energy(u, v) - local_energy(u, v);
}

Eigen::VectorXd DirichletForm::energy_density(const Eigen::VectorXd& u) const {
    if (u.size() != size()) fail(ErrorCode::invalid_argument, "energy_density: dimension mismatch");
    Eigen::VectorXd u2 = u.cwiseProduct(u);
    // gamma(x) = (1/mu(x)) sum_y K_xy (u(x)-u(y))^2
    Eigen::VectorXd g = u2.cwiseProduct(coupling_row_) - 2.0 * u.cwiseProduct(coupling_ * u) + coupling_ * u2;
    return g.cwiseQuotient(space_->masses());
}

Eigen::VectorXd DirichletForm::polarized_density(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    if (u.size() != size() || v.size() != size())
        fail(ErrorCode::invalid_argument, "polarized_density: dimension mismatch");
    Eigen::VectorXd uv = u.cwiseProduct(v);
    // (1/mu(x)) sum_y K_xy (u(x)-u(y))(v(x)-v(y)), the bilinear expansion of
    // (Gamma(u+v) - Gamma(u) - Gamma(v))/2.
    Eigen::VectorXd g = uv.cwiseProduct(coupling_row_) - u.cwiseProduct(coupling_ * v) -
                        v.cwiseProduct(coupling_ * u) + coupling_ * uv;
    return g.cwiseQuotient(space_->masses());
}

double DirichletForm::weighted_energy_integral(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                                               const Eigen::VectorXd& w) const {
    Eigen::VectorXd uv = u.cwiseProduct(v);
    Eigen::VectorXd uw = u.cwiseProduct(w);
    Eigen::VectorXd vw = v.cwiseProduct(w);
    return 0.5 * (energy(uv, w) + energy(v, uw) - energy(vw, u));
}

DirichletForm DirichletForm::truncate(double rho) const {
    if (rho < 0.0) fail(ErrorCode::invalid_argument, "rho must be >= 0");
    const int n = size();
    Eigen::MatrixXd j = jump_;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            if (a != b && space_->dist(a, b) >= rho) j(a, b) = 0.0;
    return DirichletForm(space_, local_, std::move(j), rho);
}

double DirichletForm::jump_tail_mass(double rho) const {
    if (!(rho > 0.0)) fail(ErrorCode::invalid_argument, "rho must be > 0");
    const int n = size();
    double sup = 0.0;
    for (int x = 0; x < n; ++x) {
        double tail = 0.0;
        for (int y = 0; y < n; ++y)
            if (y != x && space_->dist(x, y) >= rho) tail += jump_(x, y) * space_->mass(y);
        sup = std::max(sup, tail);
    }
    return sup;
}

double DirichletForm::sup_jump_beyond(double rho) const {
    const int n = size();
    double sup = 0.0;
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            if (y != x && space_->dist(x, y) >= rho) sup = std::max(sup, jump_(x, y));
    return sup;
}

Eigen::MatrixXd DirichletForm::quadratic_form_matrix() const {
    Eigen::MatrixXd q = -2.0 * coupling_;
    q.diagonal() += 2.0 * coupling_row_;
    return q;
}

std::uint64_t DirichletForm::content_hash() const {
    std::uint64_t h = space_->content_hash();
    h = fnv1a(local_.data(), sizeof(double) * local_.size(), h);
    h = fnv1a(jump_.data(), sizeof(double) * jump_.size(), h);
    h = fnv1a(&rho_, sizeof rho_, h);
    return h;
}

JumpTailFit fit_jump_tail(const DirichletForm& form, double beta) {
    JumpTailFit fit;
    const auto& space = form.space();
    double lo = space.min_positive_dist();
    double hi = space.diameter();
    if (!(lo > 0.0)) return fit;
    for (double rho = lo; rho <= hi * (1.0 + 1e-12); rho *= std::pow(2.0, 0.25)) {
        ++fit.grid_size;
        double c = form.jump_tail_mass(rho) * std::pow(rho, beta);
        if (c > fit.C_fit) {
            fit.C_fit = c;
            fit.worst_rho = rho;
        }
    }
    return fit;
}

JumpUpperFit check_jump_upper(const DirichletForm& form, const SpaceParams& params) {
    params.validate();
    JumpUpperFit fit;
    const int n = form.size();
    const double expo = params.alpha + params.beta;
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) {
            if (x == y) continue;
            double c = form.jump_density()(x, y) * std::pow(form.space().dist(x, y), expo);
            if (c > fit.C_fit) {
                fit.C_fit = c;
                fit.worst_x = x;
                fit.worst_y = y;
            }
        }
    return fit;
}

}  // namespace heatlab
