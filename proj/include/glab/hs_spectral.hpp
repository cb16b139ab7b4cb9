#pragma once

#include "glab/lindblad.hpp"

#include <string>
#include <vector>

namespace glab {

struct SymmetrizedGenerator {
    int dim{0};
    Mat matrix;             // Hermitian-averaged Gamma^{-1/4} L Gamma^{1/4}
    double herm_residual{0.0};
    RVec sigma_quarter;     // p_i^{1/4} in the eigenbasis
    RVec energies;
    double beta{1.0};
};

SymmetrizedGenerator kms_symmetrize(const Superoperator& L, const GibbsState& sigma, const SpectralData& spec);

// Hermitian eigensolve split along the connected components of the nonzero pattern
struct BlockEigen {
    std::vector<int> idx;
    RVec values;
    Mat vectors; // empty unless requested
};
std::vector<BlockEigen> block_eigensolve(const Mat& M, bool with_vectors);

inline constexpr std::size_t kLowCount = 32;

struct GapReport {
    double gap{0.0};
    double log10_gap{0.0};           // kept finite when gap underflows a double
    int kernel_dim{0};
    double kernel_threshold{0.0};
    std::vector<double> spectrum_low; // kLowCount smallest |lambda|, signed
    double herm_residual{0.0};
    double max_eigenvalue{0.0};
    double spectral_radius{0.0};
    double kernel_overlap{0.0};       // |P_ker sqrt(sigma)|^2 / |sqrt(sigma)|^2
    std::string sigma_E;
    int M{0};
    std::string filter;
    double beta{0.0};
    std::string method{"dense"};
};

GapReport spectral_gap(const SymmetrizedGenerator& sym, double tau_rel = 1e-8);
// distinct eigenvalues (relative clustering tolerance) of the non-kernel spectrum, ascending in |lambda|
std::vector<double> distinct_low(const GapReport& r, double rel_tol = 1e-6);

enum class GapMethod { dense, extended };

GapReport model_gap(const ModelInputs& in, GapMethod method = GapMethod::dense, double tau_rel = 1e-8);

// Sector-wise eigensolve in multiprecision for number-preserving h(N) models with
// ladder jumps {a, a^dag}; resolves gaps far below double precision.
// digits <= 0 chooses the precision from the dynamic range of the generator.
GapReport gap_number_preserving_hp(const ModelInputs& in, int digits = 0);

struct ScanResult {
    std::vector<GapReport> reports;
    bool monotone{true};
    double trend{0.0}; // slope of log(gap) against the scan variable (truncation scans)
};

ScanResult gap_scan_sigma(const ModelInputs& in, const std::vector<SigmaE>& grid, GapMethod method = GapMethod::dense,
                          double slack = 1e-8);
ScanResult gap_scan_truncation(const ModelInputs& in, const std::vector<int>& M_grid,
                               GapMethod method = GapMethod::dense);

double dirichlet_form(const SymmetrizedGenerator& sym, const Vec& x);
Vec sqrt_sigma_vec(const SymmetrizedGenerator& sym);

struct CoercivityReport {
    double M_beta{0.0};
    double c_beta{0.0};
    double S_beta{0.0};
    double riesz_A{-1.0};
};

CoercivityReport coercivity_constants(const std::vector<double>& bohr_set, double beta, double delta);
double cosh_kernel(double beta, double s); // 1 / (2 cosh(beta s / 4))

struct RieszResult {
    double A{0.0};
    double theta{0.0};
};

RieszResult riesz_constant(const std::vector<double>& residues, double omega, double beta, int theta_samples = 64);
Mat riesz_matrix(const std::vector<double>& residues, double omega, double beta, double theta);

// sum_{nu,mu} K_{nu mu} <x_nu, x_mu>, K = 1/(2 cosh((nu-mu) beta/4))
double coercive_form(const std::vector<double>& bohr, double beta, const std::vector<Vec>& x);
// int w(t) || sum_nu c_nu e^{it nu} ||^2 dt with w(t) = 1/(beta cosh(2 pi t/beta)), trapezoidal rule
double riesz_integral(const std::vector<double>& nus, const std::vector<Vec>& c, double beta);

} // namespace glab
