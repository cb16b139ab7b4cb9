#include "glab/truncation.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace glab {

namespace {

double op_norm(const Mat& X) {
    if (X.size() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(X);
    return svd.singularValues()(0);
}

Mat expm_hermitian(const Mat& H, double t) {
    Eigen::SelfAdjointEigenSolver<Mat> es(H);
    Vec ph(es.eigenvalues().size());
    for (Eigen::Index k = 0; k < ph.size(); ++k) ph(k) = std::polar(1.0, -t * es.eigenvalues()(k));
    return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

Mat compress(const Mat& H, int M) {
    Mat P = Mat::Zero(H.rows(), H.cols());
    P.topLeftCorner(M + 1, M + 1) = H.topLeftCorner(M + 1, M + 1);
    return P;
}

void require_single_mode(const TruncatedOperator& H, int M) {
    if (H.space.modes != 1) throw PreconditionError("truncation study: single mode only", "m = 1");
    if (H.space.cutoff < 2 * M) throw PreconditionError("truncation study: reference needs M_ref >= 2M", "M_ref >= 2M");
}

} // namespace

double jump_trunc_threshold(int k, double kappa) {
    return std::pow(k / (2.0 * kappa), 1.0 / kappa) + k;
}

JumpTruncNorm jump_trunc_norm(int k, double kappa, int M, int l, LadderKind kind) {
    if (k < 1) throw PreconditionError("jump_trunc_norm: k must be >= 1", "k >= 1");
    if (!(kappa > 0 && kappa <= 0.5)) throw PreconditionError("jump_trunc_norm: kappa in (0,1/2]", "kappa in (0,1/2]");
    if (l != 1 && l != 2) throw PreconditionError("jump_trunc_norm: weight level l in {1,2}", "l in {1,2}");
    if (M < jump_trunc_threshold(k, kappa) - 1e-12)
        throw PreconditionError("jump_trunc_norm: M below the truncated-jump lemma threshold (k/2kappa)^{1/kappa} + k",
                                "M >= (k/2kappa)^{1/kappa} + k");
    JumpTruncNorm r;
    r.constant_verified = kind == LadderKind::annihilation;
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> vals;
    for (int n = M + 1; n <= M + 10 * M; ++n) {
        double lv;
        if (kind == LadderKind::annihilation) {
            if (n < k) continue;
            lv = 0.5 * (std::lgamma(n + 1.0) - std::lgamma(n - k + 1.0)) + (l - 1) * std::pow(n - k, kappa) -
                 l * std::pow(n, kappa);
        } else {
            lv = 0.5 * (std::lgamma(n + k + 1.0) - std::lgamma(n + 1.0)) + (l - 1) * std::pow(n + k, kappa) -
                 l * std::pow(n, kappa);
        }
        vals.push_back(lv);
        if (lv > best) { best = lv; r.argmax = n; }
    }
    r.monotone_tail = true;
    for (size_t i = vals.size() - 10; i < vals.size(); ++i)
        if (vals[i] > vals[i - 1]) r.monotone_tail = false;
    r.measured = std::exp(best);
    r.bound = std::exp(0.5 * k * std::log(double(M)) - std::pow(M, kappa));
    return r;
}

TruncationReport jump_trunc_scan(int k, double kappa, const std::vector<int>& Ms, int l, LadderKind kind) {
    TruncationReport rep;
    rep.quantity = kind == LadderKind::annihilation ? "jump_trunc_norm(a)" : "jump_trunc_norm(a^dag)";
    for (int M : Ms) {
        rep.M_values.push_back(M);
        if (M < jump_trunc_threshold(k, kappa)) {
            rep.measured.push_back(std::nan(""));
            rep.bound.push_back(std::nan(""));
            rep.ratios.push_back(std::nan(""));
            rep.flags.push_back("skip:below-threshold");
            continue;
        }
        auto r = jump_trunc_norm(k, kappa, M, l, kind);
        rep.measured.push_back(r.measured);
        rep.bound.push_back(r.bound);
        rep.ratios.push_back(r.measured / r.bound);
        std::string f;
        if (!r.monotone_tail) f = "tail-not-monotone";
        if (!r.constant_verified) f += (f.empty() ? "" : ";") + std::string("unquantified-constant");
        rep.flags.push_back(f);
    }
    return rep;
}

Mat number_weight(int M_ref, double kappa, double l) {
    Mat W = Mat::Zero(M_ref + 1, M_ref + 1);
    for (int n = 0; n <= M_ref; ++n) W(n, n) = std::exp(-l * std::pow(double(n), kappa));
    return W;
}

double ham_trunc_residual(const TruncatedOperator& H_ref, int M, double kappa) {
    require_single_mode(H_ref, std::min(M, H_ref.space.cutoff / 2));
    const int Mr = H_ref.space.cutoff;
    if (M >= Mr) return 0.0;
    return op_norm((H_ref.matrix - compress(H_ref.matrix, M)) * number_weight(Mr, kappa));
}

std::vector<double> evol_trunc_residual(const TruncatedOperator& H_ref, int M, double kappa,
                                        const std::vector<double>& t_grid) {
    require_single_mode(H_ref, std::min(M, H_ref.space.cutoff / 2));
    const int Mr = H_ref.space.cutoff;
    const Mat W = number_weight(Mr, kappa);
    const Mat Hc = compress(H_ref.matrix, M);
    std::vector<double> out;
    for (double t : t_grid) {
        if (t == 0.0 || M >= Mr) { out.push_back(0.0); continue; }
        out.push_back(op_norm((expm_hermitian(H_ref.matrix, t) - expm_hermitian(Hc, t)) * W));
    }
    return out;
}

double generator_trunc_error(const ModelInputs& in, int M, int M_ref, const Mat& rho_ref) {
    if (M_ref < 2 * M) throw PreconditionError("generator_trunc_error: M_ref >= 2M", "M_ref >= 2M");
    BuiltModel ref = build_model(in.model, M_ref), low = build_model(in.model, M);
    Lindbladian Lr = make_lindbladian(ref.spec, ref.bare_eig, in.filter, in.sigma);
    Lindbladian Lm = make_lindbladian(low.spec, low.bare_eig, in.filter, in.sigma);
    Mat out_ref = ref.spec->from_eigen(glab::apply(Lr, ref.spec->to_eigen(rho_ref)));
    Mat rho_m = rho_ref.topLeftCorner(M + 1, M + 1);
    Mat out_m = low.spec->from_eigen(glab::apply(Lm, low.spec->to_eigen(rho_m)));
    Mat diff = out_ref;
    diff.topLeftCorner(M + 1, M + 1) -= out_m;
    return trace_norm(diff);
}

TruncationReport generator_trunc_scan(const ModelInputs& in, const std::vector<int>& Ms, int M_ref, double rho_beta) {
    BuiltModel ref = build_model(in.model, M_ref);
    const Mat rho = gibbs(*ref.spec, rho_beta).matrix;
    TruncationReport rep;
    rep.quantity = "generator_trunc_error";
    for (int M : Ms) {
        rep.M_values.push_back(M);
        double v = generator_trunc_error(in, M, M_ref, rho);
        rep.measured.push_back(v);
        // reference stability: doubling M_ref must not move the value by more than 5%
        std::string flag;
        if (2 * M_ref <= 80) {
            BuiltModel ref2 = build_model(in.model, 2 * M_ref);
            Mat rho2 = gibbs(*ref2.spec, rho_beta).matrix;
            double v2 = generator_trunc_error(in, M, 2 * M_ref, rho2);
            if (std::abs(v2 - v) > 0.05 * std::abs(v)) flag = "reference-limited";
        }
        rep.bound.push_back(std::nan(""));
        rep.ratios.push_back(std::nan(""));
        rep.flags.push_back(flag);
    }
    return rep;
}

EnergyGrowth energy_growth_fit(const TruncatedOperator& H, double kappa, int k, const std::vector<double>& t_grid) {
    if (H.space.modes != 1) throw PreconditionError("energy_growth_fit: single mode only", "m = 1");
    if (k != 2 && k != 4) throw PreconditionError("energy_growth_fit: level k in {2,4}", "k in {2,4}");
    const int Mr = H.space.cutoff, D = Mr + 1;
    RVec nk(D);
    for (int n = 0; n < D; ++n) nk(n) = std::pow(double(n), kappa);
    EnergyGrowth g;
    g.r_hat = -std::numeric_limits<double>::infinity();
    const int top = D - std::max(1, D / 10);
    for (double t : t_grid) {
        if (t == 0.0) continue;
        Mat U = expm_hermitian(H.matrix, t); // e^{-itH}
        // A = e^{kN^kappa/2} e^{itH} e^{-kN^kappa/2}; the target operator is A^dag A
        Mat A(D, D);
        for (int j = 0; j < D; ++j)
            for (int i = 0; i < D; ++i) A(i, j) = std::exp(0.5 * k * (nk(i) - nk(j))) * std::conj(U(j, i));
        double smax = op_norm(A);
        double v = 2.0 * std::log(smax) / std::pow(std::abs(t), 2.0 * kappa);
        g.per_t.push_back(v);
        g.r_hat = std::max(g.r_hat, v);
        // support leaking toward the cutoff from the lower half of the levels
        for (int j = 0; j <= Mr / 2; ++j) {
            double w = 0.0;
            for (int i = top; i < D; ++i) w += std::norm(U(i, j));
            g.boundary_weight = std::max(g.boundary_weight, w);
        }
    }
    g.boundary_warning = g.boundary_weight > 1e-6;
    return g;
}

std::vector<RegularizationPoint> regularization_error(const ModelSpec& model, double beta, SigmaE sigma, int M,
                                                      const std::vector<double>& deltas, double theta,
                                                      const Mat& rho) {
    if (!(sigma.kind == SigmaE::Kind::finite))
        throw PreconditionError("regularization_error: the delta -> 0 estimate needs sigma_E in (0, inf)",
                                "sigma_E in (0,inf)");
    BuiltModel b = build_model(model, M);
    if (!b.spec->diagonal_input)
        throw PreconditionError("regularization_error: energy weights need a diagonal h(N)", "H = h(N)");
    const FilterFunction f0 = metropolis(beta);
    Lindbladian L0 = make_lindbladian(b.spec, b.bare_eig, f0, sigma);
    const Mat out0 = glab::apply(L0, rho);
    const int D = b.spec->dim();

    // weights F~ = F make every ratio sum equal to the number of levels
    const double C = std::max(double(D) * D, 2.0 * D);
    double normA2 = 0.0;
    for (const Mat& A : b.bare_eig) normA2 += std::pow(op_norm(A), 2);
    std::vector<RegularizationPoint> out;
    for (double d : deltas) {
        RegularizationPoint p;
        p.delta = d;
        p.C_const = C;
        if (d == 0.0) { out.push_back(p); continue; }
        FilterFunction fd = metropolis_regularized(beta, d, theta);
        Lindbladian Ld = make_lindbladian(b.spec, b.bare_eig, fd, sigma);
        p.measured = trace_norm(out0 - glab::apply(Ld, rho));
        FDiagnostics F = f_diagnostics(*b.spec, f0, sigma.value, theta);
        RVec F1 = F.F1, Fe = F.F_eta, Fs1 = F.F_eta_sigma_1, Fs2 = F.F_eta_sigma_2;
        Mat t1 = F1.cast<cplx>().asDiagonal() * rho * Fe.cast<cplx>().asDiagonal();
        Mat t2 = Fs1.cast<cplx>().asDiagonal() * rho;
        Mat t3 = Fs2.cast<cplx>().asDiagonal() * rho;
        p.rhs = C * d * normA2 * (trace_norm(t1) + trace_norm(t2) + trace_norm(t3));
        out.push_back(p);
    }
    return out;
}

} // namespace glab
