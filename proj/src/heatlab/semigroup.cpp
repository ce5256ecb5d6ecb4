#include "heatlab/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "heatlab/parallel.hpp"

namespace heatlab {

namespace {
constexpr double kNegativeKernelTolerance = 1e-12;
}

Eigen::MatrixXd generator_matrix(const DirichletForm& form) {
    const int n = form.size();
    const auto& mu = form.space().masses();
    const auto& w = form.local_weights();
    const auto& j = form.jump_density();
    Eigen::MatrixXd L(n, n);
    for (int x = 0; x < n; ++x) {
        double off = 0.0;
        for (int y = 0; y < n; ++y) {
            if (y == x) continue;
            L(x, y) = 2.0 * w(x, y) / mu[x] + 2.0 * j(x, y) * mu[y];
            off += L(x, y);
        }
        L(x, x) = -off;
    }
    return L;
}

SpectralGenerator::SpectralGenerator(const DirichletForm& form) {
    domain_.resize(form.size());
    for (int i = 0; i < form.size(); ++i) domain_[i] = i;
    whole_space_ = true;
    decompose(form);
}

SpectralGenerator::SpectralGenerator(const DirichletForm& form, const std::vector<int>& domain)
    : domain_(domain) {
    if (domain_.empty()) fail(ErrorCode::invalid_argument, "killed generator: empty domain");
    whole_space_ = static_cast<int>(domain_.size()) == form.size();
    decompose(form);
}

void SpectralGenerator::decompose(const DirichletForm& form) {
    const int m = domain_size();
    Eigen::MatrixXd L_full = generator_matrix(form);
    Eigen::MatrixXd L(m, m);
    mu_.resize(m);
    for (int a = 0; a < m; ++a) {
        mu_[a] = form.space().mass(domain_[a]);
        for (int b = 0; b < m; ++b) L(a, b) = L_full(domain_[a], domain_[b]);
    }
    sqrt_mu_ = mu_.cwiseSqrt();
    Eigen::MatrixXd S = sqrt_mu_.asDiagonal() * L * sqrt_mu_.cwiseInverse().asDiagonal();
    S = 0.5 * (S + S.transpose());  // kill symmetrization roundoff
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(S);
    if (solver.info() != Eigen::Success)
        fail(ErrorCode::numeric, "eigendecomposition failed (malformed form?)");
    eigenvalues_ = solver.eigenvalues();
    eigenvectors_ = solver.eigenvectors();
}

Eigen::MatrixXd SpectralGenerator::kernel(double t) const {
    if (!(t > 0.0)) fail(ErrorCode::invalid_argument, "kernel time must be positive");
    const int m = domain_size();
    Eigen::VectorXd e = (t * eigenvalues_.array()).exp().matrix();
    Eigen::MatrixXd expS = eigenvectors_ * e.asDiagonal() * eigenvectors_.transpose();
    // p_t(x,y) = (e^{tL})_xy / mu(y) = expS_xy / sqrt(mu(x) mu(y))
    Eigen::MatrixXd p =
        sqrt_mu_.cwiseInverse().asDiagonal() * expS * sqrt_mu_.cwiseInverse().asDiagonal();
    p = 0.5 * (p + p.transpose());
    double worst = 0.0;
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            if (p(a, b) < 0.0) {
                worst = std::min(worst, p(a, b));
                p(a, b) = 0.0;
                ++clamped_;
            }
    if (worst < -kNegativeKernelTolerance)
        fail(ErrorCode::numeric, "kernel entry below -1e-12: " + format_double(worst));
    return p;
}

Eigen::VectorXd SpectralGenerator::apply(double t, const Eigen::VectorXd& f) const {
    if (f.size() != domain_size()) fail(ErrorCode::invalid_argument, "apply: dimension mismatch");
    Eigen::VectorXd g = eigenvectors_.transpose() * sqrt_mu_.cwiseProduct(f);
    g = g.cwiseProduct((t * eigenvalues_.array()).exp().matrix());
    return (eigenvectors_ * g).cwiseQuotient(sqrt_mu_);
}

Eigen::VectorXd SpectralGenerator::resolvent_of_one(double lam) const {
    if (!(lam > 0.0)) fail(ErrorCode::invalid_argument, "resolvent needs lam > 0");
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(domain_size());
    Eigen::VectorXd g = eigenvectors_.transpose() * sqrt_mu_.cwiseProduct(ones);
    g = g.cwiseQuotient((lam - eigenvalues_.array()).matrix());
    return (eigenvectors_ * g).cwiseQuotient(sqrt_mu_);
}

double SpectralGenerator::spectral_gap() const {
    double gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i < eigenvalues_.size(); ++i) {
        double lam = -eigenvalues_[i];
        if (lam > 1e-10 && lam < gap) gap = lam;
    }
    return gap;
}

HeatKernelTable::HeatKernelTable(std::vector<double> times, std::vector<Eigen::MatrixXd> kernels,
                                 std::vector<int> domain, std::uint64_t form_hash)
    : times_(std::move(times)), kernels_(std::move(kernels)), domain_(std::move(domain)),
      form_hash_(form_hash) {
    if (times_.size() != kernels_.size())
        fail(ErrorCode::invalid_argument, "kernel table: times/kernels mismatch");
    if (!std::is_sorted(times_.begin(), times_.end()))
        fail(ErrorCode::invalid_argument, "kernel table: times must be sorted");
    for (double t : times_)
        if (!(t > 0.0)) fail(ErrorCode::invalid_argument, "kernel table: times must be positive");
}

void HeatKernelTable::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::io, "cannot write " + path);
    out << "t,x,y,p\n";
    const int m = domain_size();
    for (int i = 0; i < num_times(); ++i)
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b)
                out << format_double(times_[i]) << ',' << domain_[a] << ',' << domain_[b] << ','
                    << format_double(kernels_[i](a, b)) << '\n';
}

std::uint64_t HeatKernelTable::cache_key() const {
    std::uint64_t h = form_hash_;
    h = fnv1a(times_.data(), sizeof(double) * times_.size(), h);
    h = fnv1a(domain_.data(), sizeof(int) * domain_.size(), h);
    return h;
}

namespace {
constexpr std::uint32_t kCacheMagic = 0x484c4b54;  // "HLKT"
}

void HeatKernelTable::save_binary(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::io, "cannot write " + path);
    auto put = [&](const void* p, std::size_t len) { out.write(static_cast<const char*>(p), len); };
    std::uint32_t magic = kCacheMagic, version = 1;
    std::uint64_t hash = form_hash_;
    std::int64_t nt = num_times(), m = domain_size();
    put(&magic, 4);
    put(&version, 4);
    put(&hash, 8);
    put(&nt, 8);
    put(&m, 8);
    put(times_.data(), sizeof(double) * times_.size());
    put(domain_.data(), sizeof(int) * domain_.size());
    for (const auto& k : kernels_) put(k.data(), sizeof(double) * k.size());
}

std::optional<HeatKernelTable> HeatKernelTable::load_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    auto get = [&](void* p, std::size_t len) -> bool {
        in.read(static_cast<char*>(p), len);
        return static_cast<std::size_t>(in.gcount()) == len;
    };
    std::uint32_t magic = 0, version = 0;
    std::uint64_t hash = 0;
    std::int64_t nt = 0, m = 0;
    if (!get(&magic, 4) || magic != kCacheMagic) return std::nullopt;
    if (!get(&version, 4) || version != 1) return std::nullopt;
    if (!get(&hash, 8) || !get(&nt, 8) || !get(&m, 8)) return std::nullopt;
    if (nt <= 0 || m <= 0 || nt > (1 << 20) || m > (1 << 16)) return std::nullopt;
    std::vector<double> times(nt);
    std::vector<int> domain(m);
    if (!get(times.data(), sizeof(double) * nt) || !get(domain.data(), sizeof(int) * m))
        return std::nullopt;
    std::vector<Eigen::MatrixXd> kernels(nt, Eigen::MatrixXd(m, m));
    for (auto& k : kernels)
        if (!get(k.data(), sizeof(double) * k.size())) return std::nullopt;
    return HeatKernelTable(std::move(times), std::move(kernels), std::move(domain), hash);
}

HeatKernelTable heat_kernel(const SpectralGenerator& gen, const std::vector<double>& times,
                            std::uint64_t form_hash) {
    std::vector<double> sorted = times;
    std::sort(sorted.begin(), sorted.end());
    std::vector<Eigen::MatrixXd> kernels(sorted.size());
    parallel_for(static_cast<int>(sorted.size()), [&](int i) { kernels[i] = gen.kernel(sorted[i]); });
    return HeatKernelTable(std::move(sorted), std::move(kernels), gen.domain(), form_hash);
}

HeatKernelTable heat_kernel(const DirichletForm& form, const std::vector<double>& times) {
    SpectralGenerator gen(form);
    return heat_kernel(gen, times, form.content_hash());
}

Eigen::VectorXd killed_semigroup(const DirichletForm& form, const std::vector<int>& omega, double t,
                                 const Eigen::VectorXd& f_on_omega) {
    SpectralGenerator gen(form, omega);
    return gen.apply(t, f_on_omega);
}

Eigen::VectorXd resolvent(const DirichletForm& form, const std::vector<int>& omega, double lam) {
    SpectralGenerator gen(form, omega);
    Eigen::VectorXd w_omega = gen.resolvent_of_one(lam);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(form.size());
    for (int a = 0; a < gen.domain_size(); ++a) w[omega[a]] = w_omega[a];
    return w;
}

double approximating_form(const SpectralGenerator& gen, double t, const Eigen::VectorXd& u,
                          const Eigen::VectorXd& v) {
    if (!(t > 0.0)) fail(ErrorCode::invalid_argument, "approximating form needs t > 0");
    const int n = gen.domain_size();
    if (u.size() != n || v.size() != n)
        fail(ErrorCode::invalid_argument, "approximating form: dimension mismatch");
    // Evaluated as the defining double sum, not via <u,(I-P_t)v>/t, so the
    // identity stays an independent check on the kernel.
    Eigen::MatrixXd p = gen.kernel(t);
    const Eigen::VectorXd& mu = gen.domain_masses();
    Eigen::VectorXd pt_one = p * mu;
    double first = 0.0;
    for (int x = 0; x < n; ++x) {
        double row = 0.0;
        for (int y = 0; y < n; ++y) row += (u[x] - u[y]) * (v[x] - v[y]) * p(x, y) * mu[y];
        first += row * mu[x];
    }
    double second = 0.0;
    for (int x = 0; x < n; ++x) second += u[x] * v[x] * (1.0 - pt_one[x]) * mu[x];
    return first / (2.0 * t) + second / t;
}

SurvivalCheck check_survival(const DirichletForm& form, int center, double r, double eps,
                             double delta, double beta, int grid_size) {
    if (!(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0))
        fail(ErrorCode::invalid_argument, "survival: eps, delta must lie in (0,1)");
    if (!(r > 0.0) || r >= form.space().r0())
        fail(ErrorCode::invalid_argument, "survival: r must lie in (0, R0)");
    SurvivalCheck result;
    result.eps = eps;
    result.delta = delta;
    auto ball = form.space().ball(center, r);
    auto quarter = form.space().ball(center, r / 4.0);
    result.ball_size = static_cast<int>(ball.size());
    result.quarter_size = static_cast<int>(quarter.size());
    if (quarter.empty()) {
        result.vacuous = true;
        result.pass = true;
        return result;
    }
    std::vector<int> quarter_pos;
    for (int q : quarter) {
        auto it = std::find(ball.begin(), ball.end(), q);
        quarter_pos.push_back(static_cast<int>(it - ball.begin()));
    }
    SpectralGenerator gen(form, ball);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(gen.domain_size());
    const double t_max = std::pow(delta * r, beta);
    for (int i = 0; i < grid_size; ++i) {
        double t = t_max * std::pow(2.0, -(grid_size - 1 - i));
        Eigen::VectorXd survived = gen.apply(t, ones);
        for (int pos : quarter_pos) {
            double loss = 1.0 - survived[pos];
            if (loss > result.worst) {
                result.worst = loss;
                result.worst_t = t;
            }
        }
    }
    result.pass = result.worst <= eps;
    return result;
}

}  // namespace heatlab
