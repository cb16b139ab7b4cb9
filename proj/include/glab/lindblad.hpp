#pragma once

#include "glab/filters.hpp"
#include "glab/fock.hpp"

#include <memory>
#include <string>
#include <vector>

namespace glab {

// Energy-width parameter of the Gaussian-weighted generator. Infinity and zero are
// explicit states rather than extreme floats.
struct SigmaE {
    enum class Kind { finite, infinite, zero };
    Kind kind{Kind::infinite};
    double value{0.0};

    static SigmaE inf() { return {Kind::infinite, 0.0}; }
    static SigmaE zero() { return {Kind::zero, 0.0}; }
    static SigmaE of(double s); // s = 0 or +inf map to the special kinds

    bool is_inf() const { return kind == Kind::infinite; }
    bool is_zero() const { return kind == Kind::zero; }
    double as_double() const; // +inf / 0 / value
    std::string str() const;
    // Gaussian weight between two Bohr clusters
    double weight(const SpectralData& s, int c1, int c2) const;
};

struct GibbsState {
    double beta{1.0};
    Mat matrix;      // Fock basis
    RVec weights;    // populations in the eigenbasis
    double partition_Z{0.0};  // Tr exp(-beta (H - E_0))
    double log_Z{0.0};        // log Tr exp(-beta H)
};

// All matrices below are stored in the energy eigenbasis of H; for diagonal h(N)
// this is the Fock basis up to the ascending sort.
struct Superoperator {
    int dim{0};
    Mat matrix; // D^2 x D^2, row (i,j) -> i + D j
    std::string vec_convention{"column-stacking"};
};

struct Lindbladian {
    std::shared_ptr<const SpectralData> spec;
    std::vector<Mat> bare;   // A^alpha
    std::vector<Mat> jumps;  // L^alpha
    Mat drift;               // G_sigma
    Mat coherent;            // B
    SigmaE sigma;
    FilterFunction filter;
    double beta{1.0};

    int dim() const { return spec->dim(); }
};

inline int vidx(int i, int j, int D) { return i + D * j; }
Vec vec(const Mat& X);
Mat unvec(const Vec& v, int D);

GibbsState gibbs(const SpectralData& spec, double beta);
// state exp(-beta' H)/Z in the eigenbasis (used for Gibbs-dominated test states)
Mat gibbs_eigen(const SpectralData& spec, double beta);

Mat filtered_jump_eigen(const SpectralData& spec, const Mat& A_eig, const FilterFunction& f);
Mat filtered_jump(const SpectralData& spec, const TruncatedOperator& A, const FilterFunction& f);

// bare jumps in the eigenbasis
Mat drift_eigen(const SpectralData& spec, const std::vector<Mat>& bare, const FilterFunction& f, SigmaE sigma);
Mat coherent_eigen(const SpectralData& spec, const std::vector<Mat>& bare, const FilterFunction& f, SigmaE sigma);
// K = sum_alpha sum over components of exp(-mu^2/8 sigma^2) [L^dag L]_mu ; G = -iB - K/2
Mat anticommutator_eigen(const SpectralData& spec, const std::vector<Mat>& bare, const FilterFunction& f,
                         SigmaE sigma);

Mat drift(const SpectralData& spec, const std::vector<TruncatedOperator>& bare, const FilterFunction& f, SigmaE sigma);
Mat coherent_B(const SpectralData& spec, const std::vector<TruncatedOperator>& bare, const FilterFunction& f,
               SigmaE sigma);

void require_adjoint_closed(const std::vector<Mat>& bare);

Lindbladian make_lindbladian(std::shared_ptr<const SpectralData> spec, const std::vector<Mat>& bare_eig,
                             const FilterFunction& f, SigmaE sigma);
Superoperator superoperator(const Lindbladian& lind);
std::pair<Lindbladian, Superoperator> assemble(std::shared_ptr<const SpectralData> spec,
                                               const std::vector<TruncatedOperator>& bare,
                                               const FilterFunction& f, SigmaE sigma);

// L(rho) for rho in the eigenbasis without forming the superoperator
Mat apply(const Lindbladian& lind, const Mat& rho);

// GKLS superoperator X -> sum L X L^dag + G X + X G^dag
Superoperator gkls_superop(const std::vector<Mat>& jumps, const Mat& G);

// diagnostics
double trace_preservation_residual(const Superoperator& S);   // max_kl |sum_i S[(ii),(kl)]| / max|S|
double trace_norm(const Mat& X);
double one_to_one_estimate(const Superoperator& S);           // max over |k><l| of ||S(|k><l|)||_1
double gibbs_residual(const Superoperator& S, const GibbsState& g, const SpectralData& spec);

// ---- integral forms ----

struct IntegralResult {
    Mat matrix;
    double error_estimate{0.0};
};

IntegralResult integral_jump(const SpectralData& spec, const Mat& A_eig, const KernelSamples& f, double tol = 1e-8);
IntegralResult integral_drift(const SpectralData& spec, const std::vector<Mat>& jumps_eig, const KernelSamples& g,
                              double tol = 1e-8);

// U_t o L_inf(window) o U_{-t}; jumps and coherent term conjugated by exp(itH)
Superoperator gkls_at_time(const Lindbladian& lind, double t, const WindowFunction& w);

// ---- model builder ----

struct ModelSpec {
    std::string name{"linear"};   // linear | quadratic | mf_bh | table
    double gamma{1.0};            // linear: h(n) = gamma n
    cplx psi{0.0};                // mf_bh coupling
    double U{1.0};                // mf_bh: h(n) = U n(n-1)/2
    std::vector<double> table;    // table: h(0..)

    std::vector<double> h(int M) const;
    bool number_preserving() const { return name != "mf_bh" || psi == cplx(0.0); }
};

struct ModelInputs {
    ModelSpec model;
    FilterFunction filter;
    SigmaE sigma{SigmaE::inf()};
    int M{12};
};

struct BuiltModel {
    FockSpace space;
    TruncatedOperator H;
    std::shared_ptr<const SpectralData> spec;
    std::vector<TruncatedOperator> bare; // {a, a^dag}
    std::vector<Mat> bare_eig;
};

BuiltModel build_model(const ModelSpec& m, int M);

} // namespace glab
