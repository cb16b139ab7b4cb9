#include "glab/dynamics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace glab {

namespace {

constexpr double kPi = 3.14159265358979323846;

// log p_i of the Gibbs populations, shifted so nothing overflows
RVec log_populations(const GibbsState& g, const SpectralData& spec) {
    const double E0 = spec.energies.minCoeff();
    return (-g.beta * (spec.energies.array() - E0) - std::log(g.partition_Z)).matrix();
}

void require_density(const Mat& rho, double tol = 1e-10) {
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol)
        throw PreconditionError("evolve: initial state is not Hermitian", "rho0 density matrix");
    if (std::abs(rho.trace() - cplx(1.0)) > tol)
        throw PreconditionError("evolve: initial state does not have unit trace", "rho0 density matrix");
    Eigen::SelfAdjointEigenSolver<Mat> es(rho, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -tol)
        throw PreconditionError("evolve: initial state is not positive", "rho0 density matrix");
}

} // namespace

double trace_distance(const Mat& rho, const Mat& sigma) {
    Mat d = rho - sigma;
    d = 0.5 * (d + d.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Mat> es(d, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().sum();
}

EvolutionResult evolve(const Superoperator& L, const GibbsState& sigma, const SpectralData& spec, const Mat& rho0,
                       const std::vector<double>& times, bool store_states) {
    const int D = spec.dim();
    if (rho0.rows() != D || rho0.cols() != D) throw PreconditionError("evolve: dimension mismatch", "rho0 density matrix");
    require_density(rho0);
    for (size_t k = 1; k < times.size(); ++k)
        if (times[k] < times[k - 1]) throw PreconditionError("evolve: times must be ascending", "times ascending");

    SymmetrizedGenerator sym = kms_symmetrize(L, sigma, spec);
    auto blocks = block_eigensolve(sym.matrix, true);
    const RVec lp = log_populations(sigma, spec);
    const Eigen::Index n2 = static_cast<Eigen::Index>(D) * D;
    // vec(rho) = T y with T = diag(p_i^{1/4} p_j^{1/4})
    RVec logT(n2);
    for (int j = 0; j < D; ++j)
        for (int i = 0; i < D; ++i) logT(vidx(i, j, D)) = 0.25 * (lp(i) + lp(j));
    Vec x0 = vec(rho0), y0(n2);
    for (Eigen::Index a = 0; a < n2; ++a) y0(a) = x0(a) == cplx(0) ? cplx(0) : x0(a) * std::exp(-logT(a));
    std::vector<Vec> coeff;
    for (const auto& b : blocks) {
        Vec yb(b.idx.size());
        for (size_t a = 0; a < b.idx.size(); ++a) yb(a) = y0(b.idx[a]);
        coeff.push_back(b.vectors.adjoint() * yb);
    }
    Mat sig = Mat::Zero(D, D);
    for (int i = 0; i < D; ++i) sig(i, i) = std::exp(lp(i));

    EvolutionResult r;
    r.times = times;
    for (double t : times) {
        Vec y = Vec::Zero(n2);
        for (size_t bi = 0; bi < blocks.size(); ++bi) {
            const auto& b = blocks[bi];
            Vec c = coeff[bi];
            for (Eigen::Index k = 0; k < c.size(); ++k) c(k) *= std::exp(t * b.values(k));
            Vec yb = b.vectors * c;
            for (size_t a = 0; a < b.idx.size(); ++a) y(b.idx[a]) = yb(a);
        }
        for (Eigen::Index a = 0; a < n2; ++a) y(a) *= std::exp(logT(a));
        Mat rho = t == 0.0 ? rho0 : unvec(y, D);
        r.trace_distances.push_back(trace_distance(rho, sig));
        r.trace_deviation.push_back(std::abs(rho.trace() - cplx(1.0)));
        Mat h = 0.5 * (rho + rho.adjoint());
        Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
        r.min_eigenvalue.push_back(es.eigenvalues().minCoeff());
        if (store_states) r.states.push_back(std::move(rho));
    }
    if (times.size() >= 4) {
        int last = static_cast<int>(times.size()) - 1;
        while (last > 0 && r.trace_distances[last] < 1e-10) --last;
        int first = static_cast<int>(times.size()) / 3;
        if (last > first + 1) r.rate_fit = fit_rate(r, times[first], times[last]);
    }
    return r;
}

RateFit fit_rate(const EvolutionResult& r, double t_lo, double t_hi) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (size_t k = 0; k < r.times.size(); ++k) {
        double t = r.times[k];
        if (t < t_lo || t > t_hi || r.trace_distances[k] <= 0) continue;
        double y = std::log(r.trace_distances[k]);
        sx += t; sy += y; sxx += t * t; sxy += t * y;
        ++n;
    }
    RateFit f;
    f.t_lo = t_lo;
    f.t_hi = t_hi;
    f.points = n;
    if (n < 2) return f;
    f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

double l2_x_norm(const Mat& rho0, const GibbsState& sigma, const SpectralData& spec) {
    const int D = spec.dim();
    const RVec lp = log_populations(sigma, spec);
    double s = 0.0;
    for (int j = 0; j < D; ++j)
        for (int i = 0; i < D; ++i) {
            cplx x = rho0(i, j) == cplx(0) ? cplx(0) : rho0(i, j) * std::exp(-0.25 * (lp(i) + lp(j)));
            if (i == j) x -= std::exp(0.5 * lp(i));
            s += std::norm(x);
        }
    return std::sqrt(s);
}

L2Bound l2_convergence_bound(double gap, const Mat& rho_t, const Mat& rho0, const GibbsState& sigma,
                             const SpectralData& spec, double t) {
    const int D = spec.dim();
    const RVec lp = log_populations(sigma, spec);
    Mat sig = Mat::Zero(D, D);
    for (int i = 0; i < D; ++i) sig(i, i) = std::exp(lp(i));
    L2Bound b;
    b.lhs = trace_distance(rho_t, sig);
    b.x_norm = l2_x_norm(rho0, sigma, spec);
    b.rhs = std::exp(-gap * t) * b.x_norm;
    b.holds = b.lhs <= b.rhs;
    return b;
}

// ---- Gauss-Hermite ----

namespace {

// orthonormal Hermite values p_{n-1}(x), p_n(x) with a running log scale
struct HermiteEval {
    double pn, pn1, log_scale;
};

HermiteEval hermite_pair(int n, double x) {
    double p_prev = 0.0, p = std::pow(kPi, -0.25), ls = 0.0;
    for (int j = 0; j < n; ++j) {
        double next = (std::sqrt(2.0) * x * p - std::sqrt(double(j)) * p_prev) / std::sqrt(j + 1.0);
        p_prev = p;
        p = next;
        double m = std::max(std::abs(p), std::abs(p_prev));
        if (m > 1e100) {
            p /= m;
            p_prev /= m;
            ls += std::log(m);
        }
    }
    return {p, p_prev, ls};
}

} // namespace

QuadratureScheme gauss_hermite(int n) {
    if (n < 1) throw PreconditionError("gauss_hermite: n must be >= 1", "n >= 1");
    QuadratureScheme q;
    q.n = n;
    q.nodes.resize(n);
    q.weights.resize(n);
    if (n <= 600) {
        Eigen::VectorXd diag = Eigen::VectorXd::Zero(n), sub(std::max(n - 1, 0));
        for (int j = 1; j < n; ++j) sub(j - 1) = std::sqrt(j / 2.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
        if (n == 1) {
            q.nodes[0] = 0.0;
            q.weights[0] = std::sqrt(kPi);
            return q;
        }
        es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
        for (int k = 0; k < n; ++k) {
            q.nodes[k] = es.eigenvalues()(k);
            double v = es.eigenvectors()(0, k);
            q.weights[k] = std::sqrt(kPi) * v * v;
        }
    } else {
        // x^2 are the roots of a half-size generalized Laguerre polynomial
        const int m = n / 2;
        const double alpha = (n % 2 == 0) ? -0.5 : 0.5;
        Eigen::VectorXd diag(m), sub(m - 1);
        for (int k = 0; k < m; ++k) diag(k) = 2.0 * k + alpha + 1.0;
        for (int k = 1; k < m; ++k) sub(k - 1) = std::sqrt(k * (k + alpha));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
        es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
        std::vector<double> pos(m);
        for (int k = 0; k < m; ++k) pos[k] = std::sqrt(std::max(es.eigenvalues()(k), 0.0));
        std::sort(pos.begin(), pos.end());
        for (double& x : pos)
            for (int it = 0; it < 4; ++it) {
                HermiteEval h = hermite_pair(n, x);
                double dx = h.pn / (std::sqrt(2.0 * n) * h.pn1);
                x -= dx;
                if (std::abs(dx) < 1e-15 * std::max(1.0, std::abs(x))) break;
            }
        int k = 0;
        for (int i = m - 1; i >= 0; --i) q.nodes[k++] = -pos[i];
        if (n % 2 == 1) q.nodes[k++] = 0.0;
        for (int i = 0; i < m; ++i) q.nodes[k++] = pos[i];
        for (int i = 0; i < n; ++i) {
            // Christoffel-Darboux: sum_{j<n} p_j(x_k)^2 = n p_{n-1}(x_k)^2
            HermiteEval h = hermite_pair(n, q.nodes[i]);
            double lw = -std::log(double(n)) - 2.0 * (std::log(std::abs(h.pn1)) + h.log_scale);
            q.weights[i] = std::exp(lw);
        }
    }
    for (int k = 0; k < n / 2; ++k) {
        double x = 0.5 * (q.nodes[n - 1 - k] - q.nodes[k]);
        double w = 0.5 * (q.weights[n - 1 - k] + q.weights[k]);
        q.nodes[k] = -x;
        q.nodes[n - 1 - k] = x;
        q.weights[k] = q.weights[n - 1 - k] = w;
    }
    if (n % 2 == 1) q.nodes[n / 2] = 0.0;
    return q;
}

Superoperator discretized_generator(const Lindbladian& lind, const QuadratureScheme& q, const WindowFunction& w) {
    if (lind.sigma.is_zero())
        throw PreconditionError("discretized_generator: the Davies limit sigma_E = 0 is assembled directly",
                                "sigma_E > 0");
    if (w.S < 4.0 * lind.spec->norm())
        throw PreconditionError("discretized_generator: window scale must satisfy S >= 4 ||H||", "S >= 4||H_{<=M}||");
    if (lind.sigma.is_inf()) return gkls_at_time(lind, 0.0, w);
    const double s = lind.sigma.value;
    const int D = lind.dim();
    Superoperator out;
    out.dim = D;
    out.matrix = Mat::Zero(static_cast<Eigen::Index>(D) * D, static_cast<Eigen::Index>(D) * D);
    for (int k = 0; k < q.n; ++k) {
        // far-tail nodes carry weights below any representable contribution
        if (q.weights[k] < 1e-40) continue;
        out.matrix += (q.weights[k] / std::sqrt(kPi)) * gkls_at_time(lind, q.nodes[k] / (std::sqrt(2.0) * s), w).matrix;
    }
    return out;
}

DiscretizationConstants discretization_constants(const Lindbladian& lind, const WindowFunction& w, int M) {
    DiscretizationConstants c;
    c.C = 4.0 * lind.spec->norm();
    const double beta = lind.beta;
    KernelSamples fk = time_domain(lind.filter, 80.0 * beta, 1 << 15);
    c.f_l1 = l1_norm(fk);
    KernelSamples tk = tanh_kernel(beta, w, 20.0 * beta + 40.0 / w.S, 1 << 15);
    c.kappa_l1 = l1_norm(tk);
    c.jump_norm = c.f_l1 * std::sqrt(double(M));
    c.K = 2.0 * static_cast<double>(lind.jumps.size()) * c.jump_norm * c.jump_norm * (1.0 + c.kappa_l1);
    return c;
}

double discretization_error_bound(double C, double K, double sigma_E, int n) {
    if (n < 1) throw PreconditionError("discretization_error_bound: n must be >= 1", "n >= 1");
    const double q = C * C / (4.0 * sigma_E * sigma_E * n);
    return std::exp(std::log(K) + n * std::log(q));
}

int predicted_nodes(double C, double K, double sigma_E, double eps) {
    for (int n = 1; n < 50000000; ++n)
        if (discretization_error_bound(C, K, sigma_E, n) <= eps && C * C / (4.0 * sigma_E * sigma_E * n) < 1.0)
            return n;
    throw std::runtime_error("predicted_nodes: no admissible n");
}

double mixing_time_estimate(const EvolutionResult& r, double epsilon) {
    const auto& d = r.trace_distances;
    for (size_t k = 0; k < d.size(); ++k) {
        if (d[k] <= epsilon) {
            if (k == 0) return r.times[0];
            double t0 = r.times[k - 1], t1 = r.times[k];
            double f = (d[k - 1] - epsilon) / (d[k - 1] - d[k]);
            return t0 + f * (t1 - t0);
        }
    }
    throw std::runtime_error("mixing_time_estimate: distance never reaches epsilon on the grid; final distance " +
                             std::to_string(d.empty() ? 0.0 : d.back()));
}

} // namespace glab
