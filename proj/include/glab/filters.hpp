#pragma once

#include "glab/fock.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace glab {

enum class FilterKind { gaussian, metropolis, metropolis_regularized, custom };

struct FilterFunction {
    FilterKind kind{FilterKind::metropolis};
    double beta{1.0};
    double sigma_gamma{0.0};
    double delta{0.0};
    double theta{0.0};
    std::function<cplx(double)> custom_eval;
    std::string label;

    cplx operator()(double nu) const;
    // analytic continuation; built-in kinds only
    cplx eval(cplx z) const;
    // log|f(nu)| without underflow; built-in kinds only
    double log_abs(double nu) const;
    bool builtin() const { return kind != FilterKind::custom; }
    bool schwartz() const { return kind == FilterKind::gaussian || kind == FilterKind::metropolis_regularized; }
    std::string name() const;

    // real-valued closed forms for any floating type (used by the extended-precision path)
    template <class T>
    T eval_real(const T& nu) const {
        using std::exp; using std::sqrt; using std::pow;
        const T b = T(beta);
        switch (kind) {
        case FilterKind::gaussian:
            return exp(-nu * nu / T(4.0 * sigma_gamma * sigma_gamma) - b * nu / T(4));
        case FilterKind::metropolis:
            return exp(-(sqrt(T(1) + (b * nu) * (b * nu)) + b * nu) / T(4));
        case FilterKind::metropolis_regularized:
            return exp(-(sqrt(T(1) + (b * nu) * (b * nu)) + b * nu) / T(4)) *
                   exp(-T(delta) * exp(pow(T(1) + (b * nu) * (b * nu), T(theta))));
        default:
            throw std::logic_error("eval_real: custom filters have no closed form");
        }
    }
};

FilterFunction metropolis(double beta);
FilterFunction gaussian(double beta, double sigma_gamma);
FilterFunction metropolis_regularized(double beta, double delta, double theta);
// User filter; KMS symmetry is not enforced. beta = 0 is admitted here only.
FilterFunction custom_filter(double beta, std::function<cplx(double)> f, std::string label = "custom");

double kms_residual(const FilterFunction& f, const std::vector<double>& grid);
std::vector<double> probe_grid(double beta, double half_range_in_beta = 20.0, double step_in_beta = 0.01);

// eta_{2,theta}(nu) = exp((1 + (beta nu)^2)^theta)
double eta_2theta(double beta, double theta, double nu);

// ---- time-domain kernels ----

struct KernelSamples {
    std::vector<double> times;
    std::vector<cplx> values;
    double tail_rate{std::numeric_limits<double>::quiet_NaN()};
    double omega{0.0};          // frequency cut-off used
    double aliasing{0.0};       // max |f| on the guard band / max |f|
    double split_residual{std::numeric_limits<double>::quiet_NaN()};

    double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
};

// f(t) = (1/2pi) int_{-Omega}^{Omega} fhat(nu) e^{-i nu t} dnu on t_k = -T + 2kT/N, k < N.
KernelSamples inverse_transform(const std::function<cplx(double)>& fhat, double Omega, double T, int N);
// Same integral with the contour moved to Im nu = -/+ eta for t >/< 0; fhat must be analytic
// in the strip |Im nu| <= eta. Tail values keep their relative accuracy.
KernelSamples inverse_transform_shifted(const std::function<cplx(cplx)>& fhat, double Omega, double eta,
                                        double T, int N);

// smallest Omega with |fhat(+-Omega)| <= rel * sup|fhat|, capped at cap
double frequency_cutoff(const std::function<double(double)>& absf, double cap, double rel = 1e-14);

KernelSamples time_domain(const FilterFunction& f, double T, int N);
KernelSamples time_domain_shifted(const FilterFunction& f, double eta, double T, int N);

cplx g_hat(double beta, double sigma_E, cplx nu);
double gamma_weight(double sigma_E, double t); // sigma_E sqrt(2/pi) exp(-2 sigma_E^2 t^2)
KernelSamples g_kernel(double beta, double sigma_E, double T, int N);
KernelSamples g_kernel_shifted(double beta, double sigma_E, double eta, double T, int N);
double g_tail_bound(double beta, double sigma_E, double t);

struct WindowFunction {
    double S{1.0};
    int shape_order{1};
    double operator()(double nu) const;
};

WindowFunction window(double S, int shape_order = 1);
cplx tanh_kernel_hat(double beta, const WindowFunction& w, double mu);
KernelSamples tanh_kernel(double beta, const WindowFunction& w, double T, int N);

double l1_norm(const KernelSamples& k);
// least-squares slope of log|f| against |t| over lo <= |t| <= hi
double fit_tail_rate(const KernelSamples& k, double lo, double hi);

// ---- energy-resolved filter sums ----

struct FDiagnostics {
    RVec F1, F2, F, F_eta, F_eta_sigma_1, F_eta_sigma_2;
};

// sigma_E = +inf drops the Gaussian factor; theta is used for eta_{2,theta}
FDiagnostics f_diagnostics(const SpectralData& spec, const FilterFunction& f, double sigma_E, double theta = -1.0);

} // namespace glab
