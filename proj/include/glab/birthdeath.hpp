#pragma once

#include "glab/filters.hpp"

#include <map>
#include <string>
#include <vector>

namespace glab {

struct BirthDeathRates {
    RVec mu_plus;            // n = 0..n_max
    RVec mu_minus;
    RVec gibbs_log_weights;  // log <n|sigma|n> over 0..n_max
    RVec energies;           // 0..n_max+1
    int n_max{0};
    double beta{1.0};
};

// h must be tabulated on 0..n_max+1
BirthDeathRates bd_rates(const std::vector<double>& h, const FilterFunction& f, int n_max = 200);

struct Condition0 {
    double value{0.0};
    int argmin{0};
    bool monotone_tail{false}; // (mu^-_n)^2 increasing over the probed range
};

Condition0 check_condition0(const BirthDeathRates& r);

// energy separation E_{m+s} - E_m >= delta for m >= n0 on the probed range
struct Separation {
    int n0{0};
    int s{1};
    double delta{0.0};
    double Delta_E{0.0};
    bool ok{false};
};

Separation estimate_separation(const RVec& E, int n0 = 0, int s_max = 8);

struct GapCertificate {
    double gamma{0.0};
    double c{0.0};
    double d{0.0};
    double cond0{0.0};
    double lower_bound{0.0};
    bool verified{false};
    int c_arg_m{0}, c_arg_k{0}, d_arg_m{0}, d_arg_k{0};
    std::map<std::string, double> residuals; // tail estimates and slack
};

std::vector<double> default_gamma_grid(double beta, double delta, int s);

// fitted c (gamma independent)
double fit_c(const BirthDeathRates& r, int k_max, int* arg_m = nullptr, int* arg_k = nullptr, double* tail = nullptr);
// fitted d at fixed gamma; +inf when the sums do not converge at this truncation
double fit_d(const BirthDeathRates& r, double gamma, int k_max, int* arg_m = nullptr, int* arg_k = nullptr,
             double* tail = nullptr);

GapCertificate fit_constants(const BirthDeathRates& r, std::vector<double> gamma_candidates = {}, int k_max = 10);

double lower_bound_formula(double c, double d, double gamma, const BirthDeathRates& r);
double gap_lower_bound(const GapCertificate& cert, const BirthDeathRates& r);

struct ExplicitKappa {
    double c_tilde{0.0};
    double d_tilde{0.0};
    double C_gamma{0.0};
    double gamma_tilde{0.0};
    double q{0.0};
};

double C_gamma_gamma_tilde(double gamma, double gamma_tilde);
ExplicitKappa explicit_kappa(double beta, int n0, double delta, int s, double Delta_E, double gamma);

struct ENProbe {
    bool item1{false};
    bool item3{false};
    int item1_fail_index{-1};
    double bound{0.0};
    double measured_sup{0.0};
};

ENProbe en_equivalence_probe(const std::vector<double>& E, double beta, int s, double delta, int n0 = 0);

} // namespace glab
