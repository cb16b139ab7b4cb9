#include "glab/filters.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace glab {

namespace {

constexpr double pi = std::numbers::pi;

// sqrt(1+x^2)+x without cancellation for x << 0
double metro_exponent(double x) {
    double r = std::sqrt(1.0 + x * x);
    return x >= 0 ? r + x : 1.0 / (r - x);
}

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

} // namespace

// ---- filter kinds ----

FilterFunction metropolis(double beta) {
    if (!(beta > 0)) throw PreconditionError("metropolis: beta must be positive", "beta > 0");
    FilterFunction f;
    f.kind = FilterKind::metropolis;
    f.beta = beta;
    return f;
}

FilterFunction gaussian(double beta, double sigma_gamma) {
    if (!(beta > 0) || !(sigma_gamma > 0))
        throw PreconditionError("gaussian: beta and sigma_gamma must be positive", "beta > 0, sigma_gamma > 0");
    FilterFunction f;
    f.kind = FilterKind::gaussian;
    f.beta = beta;
    f.sigma_gamma = sigma_gamma;
    return f;
}

FilterFunction metropolis_regularized(double beta, double delta, double theta) {
    if (!(beta > 0)) throw PreconditionError("metropolis_regularized: beta must be positive", "beta > 0");
    if (!(delta > 0 && delta <= 1))
        throw PreconditionError("metropolis_regularized: delta must lie in (0,1]", "delta in (0,1]");
    if (!(theta > 0 && theta < 0.5))
        throw PreconditionError("metropolis_regularized: theta must lie in (0,1/2) for the decay lemma",
                                "theta in (0,1/2)");
    FilterFunction f;
    f.kind = FilterKind::metropolis_regularized;
    f.beta = beta;
    f.delta = delta;
    f.theta = theta;
    return f;
}

FilterFunction custom_filter(double beta, std::function<cplx(double)> fn, std::string label) {
    if (!(beta >= 0)) throw PreconditionError("custom_filter: beta must be nonnegative", "beta >= 0");
    FilterFunction f;
    f.kind = FilterKind::custom;
    f.beta = beta;
    f.custom_eval = std::move(fn);
    f.label = std::move(label);
    return f;
}

std::string FilterFunction::name() const {
    switch (kind) {
    case FilterKind::gaussian: return "gaussian";
    case FilterKind::metropolis: return "metropolis";
    case FilterKind::metropolis_regularized: return "metropolis_regularized";
    default: return label.empty() ? "custom" : label;
    }
}

double FilterFunction::log_abs(double nu) const {
    const double x = beta * nu;
    switch (kind) {
    case FilterKind::gaussian:
        return -nu * nu / (4.0 * sigma_gamma * sigma_gamma) - x / 4.0;
    case FilterKind::metropolis:
        return -metro_exponent(x) / 4.0;
    case FilterKind::metropolis_regularized:
        return -metro_exponent(x) / 4.0 - delta * std::exp(std::pow(1.0 + x * x, theta));
    default:
        return std::log(std::abs(custom_eval(nu)));
    }
}

cplx FilterFunction::operator()(double nu) const {
    if (kind == FilterKind::custom) return custom_eval(nu);
    return std::exp(log_abs(nu));
}

cplx FilterFunction::eval(cplx z) const {
    const cplx x = beta * z;
    switch (kind) {
    case FilterKind::gaussian:
        return std::exp(-z * z / (4.0 * sigma_gamma * sigma_gamma) - x / 4.0);
    case FilterKind::metropolis:
        return std::exp(-(std::sqrt(1.0 + x * x) + x) / 4.0);
    case FilterKind::metropolis_regularized:
        return std::exp(-(std::sqrt(1.0 + x * x) + x) / 4.0 - delta * std::exp(std::pow(1.0 + x * x, theta)));
    default:
        if (z.imag() != 0.0) throw std::logic_error("FilterFunction::eval: custom filters are real-line only");
        return custom_eval(z.real());
    }
}

double kms_residual(const FilterFunction& f, const std::vector<double>& grid) {
    if (grid.empty()) throw PreconditionError("kms_residual: empty grid", "grid non-empty");
    double r = 0.0;
    for (double nu : grid)
        r = std::max(r, std::abs(std::conj(f(nu)) - f(-nu) * std::exp(-f.beta * nu / 2.0)));
    return r;
}

std::vector<double> probe_grid(double beta, double half_range, double step) {
    const double b = beta > 0 ? beta : 1.0;
    const int n = static_cast<int>(std::round(half_range / step));
    std::vector<double> g;
    g.reserve(2 * n + 1);
    for (int k = -n; k <= n; ++k) g.push_back(k * step / b);
    return g;
}

double eta_2theta(double beta, double theta, double nu) {
    return std::exp(std::pow(1.0 + beta * beta * nu * nu, theta));
}

// ---- transforms ----

double frequency_cutoff(const std::function<double(double)>& absf, double cap, double rel) {
    const int n = 20000;
    const double h = cap / n;
    double sup = 0.0;
    for (int k = -n; k <= n; ++k) sup = std::max(sup, absf(k * h));
    for (int k = n; k >= 0; --k) {
        if (absf(k * h) > rel * sup || absf(-k * h) > rel * sup) return std::min(cap, (k + 1) * h);
    }
    return h;
}

namespace {

// samples f on the FFT grid of period L = 16T, returns (dt, values over one period)
void fft_grid(const std::function<cplx(double)>& fhat, double Omega, double T, int N,
              int& r, int& P, double& dnu, std::vector<cplx>& out) {
    if (!is_pow2(N)) throw PreconditionError("inverse_transform: N must be a power of two", "N power of two");
    if (!(T > 0) || !(Omega > 0)) throw PreconditionError("inverse_transform: T and Omega must be positive", "T > 0");
    const double L = 16.0 * T;
    dnu = 2.0 * pi / L;
    r = 1;
    while (static_cast<double>(N) * r * pi / T < 2.0 * Omega) r *= 2;
    P = 8 * N * r;
    std::vector<cplx> in(P);
    for (int j = 0; j < P; ++j) {
        double nu = (j - P / 2) * dnu;
        in[j] = std::abs(nu) <= Omega ? fhat(nu) : cplx(0.0);
    }
    Eigen::FFT<double> fft;
    fft.fwd(out, in);
    const double c = dnu / (2.0 * pi);
    for (int m = 0; m < P; ++m) out[m] *= (m % 2 ? -c : c);
}

KernelSamples pick(const std::vector<cplx>& full, int r, int P, double T, int N, double Omega) {
    KernelSamples ks;
    ks.omega = Omega;
    ks.times.resize(N);
    ks.values.resize(N);
    const double dtk = 2.0 * T / N;
    for (int k = 0; k < N; ++k) {
        long m = (static_cast<long>(k - N / 2) * r) % P;
        if (m < 0) m += P;
        ks.times[k] = (k - N / 2) * dtk;
        ks.values[k] = full[m];
    }
    // guard band |t| in [4T, 8T)
    double top = 0.0, guard = 0.0;
    const double dt = 2.0 * T / (static_cast<double>(N) * r);
    for (int m = 0; m < P; ++m) {
        double t = m < P / 2 ? m * dt : (m - P) * dt;
        double a = std::abs(full[m]);
        top = std::max(top, a);
        if (std::abs(t) >= 4.0 * T) guard = std::max(guard, a);
    }
    ks.aliasing = top > 0 ? guard / top : 0.0;
    return ks;
}

} // namespace

KernelSamples inverse_transform(const std::function<cplx(double)>& fhat, double Omega, double T, int N) {
    int r, P;
    double dnu;
    std::vector<cplx> full;
    fft_grid(fhat, Omega, T, N, r, P, dnu, full);
    KernelSamples ks = pick(full, r, P, T, N, Omega);
    ks.tail_rate = fit_tail_rate(ks, T / 3.0, T);
    return ks;
}

KernelSamples inverse_transform_shifted(const std::function<cplx(cplx)>& fhat, double Omega, double eta,
                                        double T, int N) {
    if (!(eta > 0)) throw PreconditionError("inverse_transform_shifted: eta must be positive", "eta > 0");
    int r, P;
    double dnu;
    std::vector<cplx> lo, hi;
    fft_grid([&](double x) { return fhat(cplx(x, -eta)); }, Omega, T, N, r, P, dnu, lo);
    fft_grid([&](double x) { return fhat(cplx(x, eta)); }, Omega, T, N, r, P, dnu, hi);
    const double dt = 2.0 * T / (static_cast<double>(N) * r);
    std::vector<cplx> full(P);
    for (int m = 0; m < P; ++m) {
        double t = m < P / 2 ? m * dt : (m - P) * dt;
        full[m] = t >= 0 ? lo[m] * std::exp(-eta * t) : hi[m] * std::exp(eta * t);
    }
    KernelSamples ks = pick(full, r, P, T, N, Omega);
    ks.tail_rate = fit_tail_rate(ks, T / 3.0, T);
    return ks;
}

KernelSamples time_domain(const FilterFunction& f, double T, int N) {
    if (!f.schwartz())
        throw PreconditionError("time_domain: non-integrable filter; use regularized variant",
                                "filter of Schwartz kind");
    double Omega = frequency_cutoff([&](double nu) { return std::abs(f(nu)); }, 200.0 / f.beta);
    return inverse_transform([&](double nu) { return f(nu); }, Omega, T, N);
}

KernelSamples time_domain_shifted(const FilterFunction& f, double eta, double T, int N) {
    if (!f.schwartz())
        throw PreconditionError("time_domain: non-integrable filter; use regularized variant",
                                "filter of Schwartz kind");
    if (f.kind == FilterKind::metropolis_regularized && !(eta * f.beta < 1.0))
        throw PreconditionError("time_domain_shifted: contour must stay inside |Im beta nu| < 1",
                                "eta < 1/beta");
    double Omega = frequency_cutoff(
        [&](double x) { return std::max(std::abs(f.eval({x, -eta})), std::abs(f.eval({x, eta}))); },
        200.0 / f.beta);
    return inverse_transform_shifted([&](cplx z) { return f.eval(z); }, Omega, eta, T, N);
}

// ---- drift kernel g ----

cplx g_hat(double beta, double sigma_E, cplx nu) {
    cplx gauss = std::isinf(sigma_E) ? cplx(1.0) : std::exp(-nu * nu / (8.0 * sigma_E * sigma_E));
    cplx u = beta * nu / 2.0;
    cplx fermi = u.real() > 0 ? std::exp(-u) / (1.0 + std::exp(-u)) : 1.0 / (1.0 + std::exp(u));
    return gauss * fermi;
}

double gamma_weight(double sigma_E, double t) {
    return sigma_E * std::sqrt(2.0 / pi) * std::exp(-2.0 * sigma_E * sigma_E * t * t);
}

namespace {

double g_split_residual(const KernelSamples& ks, double sigma_E) {
    const int N = static_cast<int>(ks.times.size());
    double r = 0.0;
    for (int k = 1; k < N; ++k)
        r = std::max(r, std::abs(ks.values[k] + ks.values[N - k] - gamma_weight(sigma_E, ks.times[k])));
    return r;
}

} // namespace

KernelSamples g_kernel(double beta, double sigma_E, double T, int N) {
    if (!(beta > 0) || !(sigma_E > 0) || std::isinf(sigma_E))
        throw PreconditionError("g_kernel: beta and sigma_E must be positive and finite", "beta, sigma_E > 0");
    double Omega = frequency_cutoff([&](double nu) { return std::abs(g_hat(beta, sigma_E, nu)); },
                                    std::max(200.0 / beta, 20.0 * sigma_E));
    KernelSamples ks = inverse_transform([&](double nu) { return g_hat(beta, sigma_E, nu); }, Omega, T, N);
    ks.split_residual = g_split_residual(ks, sigma_E);
    return ks;
}

KernelSamples g_kernel_shifted(double beta, double sigma_E, double eta, double T, int N) {
    if (!(eta * beta < 2.0 * pi))
        throw PreconditionError("g_kernel_shifted: contour must avoid the Fermi poles", "eta < 2 pi / beta");
    double Omega = frequency_cutoff(
        [&](double x) { return std::max(std::abs(g_hat(beta, sigma_E, {x, -eta})), std::abs(g_hat(beta, sigma_E, {x, eta}))); },
        std::max(200.0 / beta, 20.0 * sigma_E));
    KernelSamples ks = inverse_transform_shifted([&](cplx z) { return g_hat(beta, sigma_E, z); }, Omega, eta, T, N);
    ks.split_residual = g_split_residual(ks, sigma_E);
    return ks;
}

double g_tail_bound(double beta, double sigma_E, double t) {
    return sigma_E / std::sqrt(2.0 * pi) * std::exp(pi * pi / (8.0 * beta * beta * sigma_E * sigma_E)) *
           std::exp(-pi * std::abs(t) / beta);
}

// ---- window and tanh kernel ----

double WindowFunction::operator()(double nu) const {
    double x = (S - std::abs(nu)) / (S / 2.0);
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    auto psi = [this](double y) { return y > 0 ? std::exp(-1.0 / std::pow(y, shape_order)) : 0.0; };
    double a = psi(x), b = psi(1.0 - x);
    return a / (a + b);
}

WindowFunction window(double S, int shape_order) {
    if (!(S > 0)) throw PreconditionError("window: S must be positive", "S > 0");
    if (shape_order < 1) throw PreconditionError("window: shape order must be >= 1", "s >= 1");
    return {S, shape_order};
}

cplx tanh_kernel_hat(double beta, const WindowFunction& w, double mu) {
    return cplx(0.0, -0.5) * std::tanh(-beta * mu / 4.0) * w(mu);
}

KernelSamples tanh_kernel(double beta, const WindowFunction& w, double T, int N) {
    return inverse_transform([&](double mu) { return tanh_kernel_hat(beta, w, mu); }, w.S, T, N);
}

double l1_norm(const KernelSamples& k) {
    double s = 0.0;
    for (const cplx& v : k.values) s += std::abs(v);
    return s * k.dt();
}

double fit_tail_rate(const KernelSamples& k, double lo, double hi) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (size_t i = 0; i < k.times.size(); ++i) {
        double t = std::abs(k.times[i]);
        double a = std::abs(k.values[i]);
        if (t < lo || t > hi || !(a > 0)) continue;
        double y = std::log(a);
        sx += t; sy += y; sxx += t * t; sxy += t * y;
        ++n;
    }
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---- F diagnostics ----

FDiagnostics f_diagnostics(const SpectralData& spec, const FilterFunction& f, double sigma_E, double theta) {
    if (!spec.diagonal_input)
        throw PreconditionError("f_diagnostics: requires a diagonal h(N) Hamiltonian", "H = h(N)");
    if (theta < 0) theta = f.kind == FilterKind::metropolis_regularized ? f.theta : 0.25;
    const int D = spec.dim();
    const RVec& E = spec.energies;
    auto af = [&](double nu) { return std::abs(f(nu)); };
    auto gw = [&](double x) { return std::isinf(sigma_E) ? 1.0 : std::exp(-x * x / (8.0 * sigma_E * sigma_E)); };
    FDiagnostics d;
    d.F1 = RVec::Zero(D); d.F2 = RVec::Zero(D); d.F = RVec::Zero(D); d.F_eta = RVec::Zero(D);
    d.F_eta_sigma_1 = RVec::Zero(D); d.F_eta_sigma_2 = RVec::Zero(D);
    for (int e = 0; e < D; ++e) {
        for (int p = 0; p < D; ++p) {
            double nu = E(p) - E(e), a = af(nu);
            d.F1(e) += a;
            d.F(e) += a * a;
            d.F_eta(e) += eta_2theta(f.beta, theta, nu) * a;
            for (int q = 0; q < D; ++q) {
                double x = f.beta * (E(q) - E(e)) / 2.0;
                double fermi = x > 0 ? std::exp(-x) / (1.0 + std::exp(-x)) : 1.0 / (1.0 + std::exp(x));
                d.F2(e) += af(E(p) - E(q)) * a * fermi;
            }
        }
    }
    for (int e = 0; e < D; ++e) {
        double gs = 0.0;
        for (int p = 0; p < D; ++p) {
            double g = gw(E(p) - E(e));
            d.F_eta_sigma_1(e) += g * d.F_eta(p);
            gs += g;
        }
        d.F_eta_sigma_2(e) = d.F_eta(e) * gs;
    }
    return d;
}

} // namespace glab
