#pragma once

#include "glab/lindblad.hpp"

#include <string>
#include <vector>

namespace glab {

struct TruncationReport {
    std::string quantity;
    std::vector<int> M_values;
    std::vector<double> measured;
    std::vector<double> bound;
    std::vector<double> ratios;
    std::vector<std::string> flags; // per point; "" when hypotheses hold
};

enum class LadderKind { annihilation, creation };

struct JumpTruncNorm {
    double measured{0.0};
    double bound{0.0};
    int argmax{0};
    bool monotone_tail{false};
    bool constant_verified{true}; // false where the bound carries an unquantified constant
};

// sup_{n > M} of the weighted shift e^{(l-1)N^kappa} A^k e^{-l N^kappa} on |n>, A = a or a^dag,
// against M^{k/2} e^{-M^kappa}
JumpTruncNorm jump_trunc_norm(int k, double kappa, int M, int l = 1, LadderKind kind = LadderKind::annihilation);
double jump_trunc_threshold(int k, double kappa);
TruncationReport jump_trunc_scan(int k, double kappa, const std::vector<int>& Ms, int l = 1,
                                 LadderKind kind = LadderKind::annihilation);

// weight e^{-N^kappa} on a single-mode M_ref space
Mat number_weight(int M_ref, double kappa, double l = 1.0);

// || (H_ref - P_M H_ref P_M) e^{-N^kappa} ||
double ham_trunc_residual(const TruncatedOperator& H_ref, int M, double kappa);
// || (e^{-itH_ref} - e^{-it P H_ref P}) e^{-N^kappa} || per t
std::vector<double> evol_trunc_residual(const TruncatedOperator& H_ref, int M, double kappa,
                                        const std::vector<double>& t_grid);

struct GeneratorTruncParams {
    double beta{0.02};
    double rho_beta_factor{2.0}; // rho = Gibbs at rho_beta_factor * beta in the reference space
};

// || (L_ref - embed(L_M))(rho) ||_1 ; rho compressed to the M space for L_M
double generator_trunc_error(const ModelInputs& in, int M, int M_ref, const Mat& rho_ref_fock);
TruncationReport generator_trunc_scan(const ModelInputs& in, const std::vector<int>& Ms, int M_ref,
                                      double rho_beta);

struct EnergyGrowth {
    double r_hat{0.0};
    std::vector<double> per_t;
    double boundary_weight{0.0};
    bool boundary_warning{false};
};

EnergyGrowth energy_growth_fit(const TruncatedOperator& H, double kappa, int k, const std::vector<double>& t_grid);

struct RegularizationPoint {
    double delta{0.0};
    double measured{0.0};
    double rhs{0.0};
    double C_const{0.0};
};

// L with the Metropolis filter against L with the regularized filter at each delta, applied to rho (eigenbasis)
std::vector<RegularizationPoint> regularization_error(const ModelSpec& model, double beta, SigmaE sigma, int M,
                                                      const std::vector<double>& deltas, double theta,
                                                      const Mat& rho_eig);

} // namespace glab
