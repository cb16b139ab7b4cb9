#pragma once

#include "glab/hs_spectral.hpp"

#include <optional>
#include <vector>

namespace glab {

struct RateFit {
    double slope{0.0};
    double intercept{0.0};
    double t_lo{0.0}, t_hi{0.0};
    int points{0};
};

struct EvolutionResult {
    std::vector<double> times;
    std::vector<double> trace_distances;
    std::vector<double> trace_deviation; // |Tr rho_t - 1|
    std::vector<double> min_eigenvalue;
    RateFit rate_fit;
    std::vector<Mat> states; // filled when requested
};

// Distance between rho and sigma as the sum of absolute eigenvalues (no 1/2 factor).
double trace_distance(const Mat& rho, const Mat& sigma);

// rho_t = exp(tL) rho0 through the symmetrized frame. rho0 in the eigenbasis.
EvolutionResult evolve(const Superoperator& L, const GibbsState& sigma, const SpectralData& spec, const Mat& rho0,
                       const std::vector<double>& times, bool store_states = false);

// least-squares slope of log(trace distance) over t in [t_lo, t_hi]
RateFit fit_rate(const EvolutionResult& r, double t_lo, double t_hi);

struct L2Bound {
    double lhs{0.0};
    double rhs{0.0};
    double x_norm{0.0}; // ||sigma^{-1/4} rho0 sigma^{-1/4} - sigma^{1/2}||_2
    bool holds{false};
};

L2Bound l2_convergence_bound(double gap, const Mat& rho_t, const Mat& rho0, const GibbsState& sigma,
                             const SpectralData& spec, double t);
double l2_x_norm(const Mat& rho0, const GibbsState& sigma, const SpectralData& spec);

struct QuadratureScheme {
    int n{0};
    std::vector<double> nodes;
    std::vector<double> weights;
};

QuadratureScheme gauss_hermite(int n);

// (1/sqrt(pi)) sum_k w_k gkls_at_time(x_k / (sqrt(2) sigma_E))
Superoperator discretized_generator(const Lindbladian& lind, const QuadratureScheme& q, const WindowFunction& w);

struct DiscretizationConstants {
    double C{0.0};
    double K{0.0};
    double f_l1{0.0};
    double kappa_l1{0.0};
    double jump_norm{0.0};
};

// C = 4||H||; K = 2 |A| (||f||_1 sqrt(M))^2 (1 + ||t_kappa||_1)
DiscretizationConstants discretization_constants(const Lindbladian& lind, const WindowFunction& w, int M);
double discretization_error_bound(double C, double K, double sigma_E, int n);
// smallest n with the bound <= eps
int predicted_nodes(double C, double K, double sigma_E, double eps);

double mixing_time_estimate(const EvolutionResult& r, double epsilon);

} // namespace glab
