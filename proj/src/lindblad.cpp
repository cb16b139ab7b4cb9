#include "glab/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace glab {

// ---- sigma_E ----

SigmaE SigmaE::of(double s) {
    if (std::isinf(s) && s > 0) return inf();
    if (s == 0.0) return zero();
    if (!(s > 0)) throw PreconditionError("SigmaE: sigma_E must be >= 0", "sigma_E in [0, inf]");
    return {Kind::finite, s};
}

double SigmaE::as_double() const {
    if (is_inf()) return std::numeric_limits<double>::infinity();
    if (is_zero()) return 0.0;
    return value;
}

std::string SigmaE::str() const {
    if (is_inf()) return "inf";
    std::ostringstream os;
    os << as_double();
    return os.str();
}

double SigmaE::weight(const SpectralData& s, int c1, int c2) const {
    switch (kind) {
    case Kind::infinite: return 1.0;
    case Kind::zero: return c1 == c2 ? 1.0 : 0.0;
    default: {
        double d = s.bohr[c1].nu - s.bohr[c2].nu;
        return std::exp(-d * d / (8.0 * value * value));
    }
    }
}

// ---- vectorization ----

Vec vec(const Mat& X) {
    return Eigen::Map<const Vec>(X.data(), X.size());
}

Mat unvec(const Vec& v, int D) {
    return Eigen::Map<const Mat>(v.data(), D, D);
}

// ---- Gibbs state ----

GibbsState gibbs(const SpectralData& spec, double beta) {
    if (!(beta >= 0)) throw PreconditionError("gibbs: beta must be nonnegative", "beta > 0");
    GibbsState g;
    g.beta = beta;
    const int D = spec.dim();
    const double E0 = spec.energies(0);
    g.weights.resize(D);
    for (int i = 0; i < D; ++i) g.weights(i) = std::exp(-beta * (spec.energies(i) - E0));
    g.partition_Z = g.weights.sum();
    g.weights /= g.partition_Z;
    g.log_Z = std::log(g.partition_Z) - beta * E0;
    g.matrix = spec.from_eigen(g.weights.cast<cplx>().asDiagonal().toDenseMatrix());
    return g;
}

Mat gibbs_eigen(const SpectralData& spec, double beta) {
    return gibbs(spec, beta).weights.cast<cplx>().asDiagonal().toDenseMatrix();
}

// ---- jumps, drift, coherent term ----

namespace {

struct Nz { int i, j; cplx v; };

// nonzero entries grouped by row
std::vector<std::vector<Nz>> rows_of(const Mat& L) {
    std::vector<std::vector<Nz>> r(L.rows());
    for (int j = 0; j < L.cols(); ++j)
        for (int i = 0; i < L.rows(); ++i)
            if (L(i, j) != cplx(0)) r[i].push_back({i, j, L(i, j)});
    return r;
}

std::vector<Nz> nonzeros(const Mat& L) {
    std::vector<Nz> out;
    for (int j = 0; j < L.cols(); ++j)
        for (int i = 0; i < L.rows(); ++i)
            if (L(i, j) != cplx(0)) out.push_back({i, j, L(i, j)});
    return out;
}

double fermi(double x) { // 1/(1+e^x)
    return x > 0 ? std::exp(-x) / (1.0 + std::exp(-x)) : 1.0 / (1.0 + std::exp(x));
}

// sum_alpha sum_k coef(c_ki, c_kj) conj(L_ki) L_kj with coef from a weight functor
template <class F>
Mat bohr_pair_sum(const SpectralData& spec, const std::vector<Mat>& jumps, F coef) {
    const int D = spec.dim();
    Mat out = Mat::Zero(D, D);
    for (const Mat& L : jumps) {
        auto rows = rows_of(L);
        for (int k = 0; k < D; ++k)
            for (const Nz& a : rows[k])
                for (const Nz& b : rows[k]) {
                    const int c1 = spec.cluster_of(k, a.j), c2 = spec.cluster_of(k, b.j);
                    out(a.j, b.j) += coef(c1, c2) * std::conj(a.v) * b.v;
                }
    }
    return out;
}

std::vector<Mat> filtered(const SpectralData& spec, const std::vector<Mat>& bare, const FilterFunction& f) {
    std::vector<Mat> out;
    out.reserve(bare.size());
    for (const Mat& A : bare) out.push_back(filtered_jump_eigen(spec, A, f));
    return out;
}

} // namespace

Mat filtered_jump_eigen(const SpectralData& spec, const Mat& A, const FilterFunction& f) {
    const int D = spec.dim();
    std::vector<cplx> fc(spec.bohr.size());
    std::vector<char> done(spec.bohr.size(), 0);
    Mat L = Mat::Zero(D, D);
    for (int j = 0; j < D; ++j)
        for (int i = 0; i < D; ++i) {
            if (A(i, j) == cplx(0)) continue;
            int c = spec.cluster_of(i, j);
            if (!done[c]) { fc[c] = f(spec.bohr[c].nu); done[c] = 1; }
            L(i, j) = fc[c] * A(i, j);
        }
    return L;
}

Mat filtered_jump(const SpectralData& spec, const TruncatedOperator& A, const FilterFunction& f) {
    return spec.from_eigen(filtered_jump_eigen(spec, spec.to_eigen(A.matrix), f));
}

Mat drift_eigen(const SpectralData& spec, const std::vector<Mat>& bare, const FilterFunction& f, SigmaE sigma) {
    const double beta = f.beta;
    return -bohr_pair_sum(spec, filtered(spec, bare, f), [&](int c1, int c2) {
        const double d = spec.bohr[c2].nu - spec.bohr[c1].nu; // nu2 - nu1
        const double fw = fermi(beta * d / 2.0);
        if (sigma.is_inf() && std::abs(beta * d / 4.0) < 300.0) {
            // cosh form of the same weight
            double x = beta * (-d) / 4.0;
            double ch = std::exp(x) / (2.0 * std::cosh(x));
            if (std::abs(ch - fw) > 1e-14) throw std::logic_error("drift: Fermi and cosh weights disagree");
        }
        return sigma.weight(spec, c1, c2) * fw;
    });
}

Mat coherent_eigen(const SpectralData& spec, const std::vector<Mat>& bare, const FilterFunction& f, SigmaE sigma) {
    const double beta = f.beta;
    Mat B = bohr_pair_sum(spec, filtered(spec, bare, f), [&](int c1, int c2) {
        const double mu = spec.bohr[c2].nu - spec.bohr[c1].nu;
        return cplx(0.0, 0.5) * std::tanh(beta * mu / 4.0) * sigma.weight(spec, c1, c2);
    });
    return 0.5 * (B + B.adjoint()).eval();
}

Mat anticommutator_eigen(const SpectralData& spec, const std::vector<Mat>& bare, const FilterFunction& f,
                         SigmaE sigma) {
    return bohr_pair_sum(spec, filtered(spec, bare, f),
                         [&](int c1, int c2) { return sigma.weight(spec, c1, c2); });
}

namespace {

std::vector<Mat> to_eigen_all(const SpectralData& spec, const std::vector<TruncatedOperator>& ops) {
    std::vector<Mat> out;
    for (const auto& A : ops) out.push_back(spec.to_eigen(A.matrix));
    return out;
}

} // namespace

Mat drift(const SpectralData& spec, const std::vector<TruncatedOperator>& bare, const FilterFunction& f,
          SigmaE sigma) {
    return spec.from_eigen(drift_eigen(spec, to_eigen_all(spec, bare), f, sigma));
}

Mat coherent_B(const SpectralData& spec, const std::vector<TruncatedOperator>& bare, const FilterFunction& f,
               SigmaE sigma) {
    return spec.from_eigen(coherent_eigen(spec, to_eigen_all(spec, bare), f, sigma));
}

void require_adjoint_closed(const std::vector<Mat>& bare) {
    for (const Mat& A : bare) {
        bool found = false;
        for (const Mat& B : bare) {
            if (B.rows() != A.rows()) continue;
            double tol = 1e-14 * (1.0 + A.cwiseAbs().maxCoeff());
            if ((A.adjoint() - B).cwiseAbs().maxCoeff() <= tol) { found = true; break; }
        }
        if (!found)
            throw PreconditionError("assemble: KMS structure requires adjoint-closed bare jumps",
                                    "bare jumps closed under adjoint");
    }
}

// ---- assembly ----

Lindbladian make_lindbladian(std::shared_ptr<const SpectralData> spec, const std::vector<Mat>& bare_eig,
                             const FilterFunction& f, SigmaE sigma) {
    require_adjoint_closed(bare_eig);
    Lindbladian l;
    l.spec = spec;
    l.bare = bare_eig;
    l.jumps = filtered(*spec, bare_eig, f);
    l.drift = drift_eigen(*spec, bare_eig, f, sigma);
    l.coherent = coherent_eigen(*spec, bare_eig, f, sigma);
    l.sigma = sigma;
    l.filter = f;
    l.beta = f.beta;
    return l;
}

Superoperator superoperator(const Lindbladian& lind) {
    const SpectralData& s = *lind.spec;
    const int D = s.dim();
    Superoperator S;
    S.dim = D;
    S.matrix = Mat::Zero(static_cast<Eigen::Index>(D) * D, static_cast<Eigen::Index>(D) * D);
    for (const Mat& L : lind.jumps) {
        auto nz = nonzeros(L);
        for (const Nz& x : nz)       // (i,k)
            for (const Nz& y : nz) { // (j,l)
                double w = lind.sigma.weight(s, s.cluster_of(x.i, x.j), s.cluster_of(y.i, y.j));
                if (w == 0.0) continue;
                S.matrix(vidx(x.i, y.i, D), vidx(x.j, y.j, D)) += w * x.v * std::conj(y.v);
            }
    }
    const Mat& G = lind.drift;
    for (int j = 0; j < D; ++j)
        for (int i = 0; i < D; ++i)
            for (int k = 0; k < D; ++k) {
                // (G X)_{ij} = G_ik X_kj ; (X G^dag)_{ij} = X_ik conj(G_jk)
                if (G(i, k) != cplx(0)) S.matrix(vidx(i, j, D), vidx(k, j, D)) += G(i, k);
                if (G(j, k) != cplx(0)) S.matrix(vidx(i, j, D), vidx(i, k, D)) += std::conj(G(j, k));
            }
    return S;
}

std::pair<Lindbladian, Superoperator> assemble(std::shared_ptr<const SpectralData> spec,
                                               const std::vector<TruncatedOperator>& bare,
                                               const FilterFunction& f, SigmaE sigma) {
    Lindbladian l = make_lindbladian(spec, to_eigen_all(*spec, bare), f, sigma);
    Superoperator S = superoperator(l);
    return {std::move(l), std::move(S)};
}

Mat apply(const Lindbladian& lind, const Mat& rho) {
    const SpectralData& s = *lind.spec;
    Mat out = lind.drift * rho + rho * lind.drift.adjoint();
    for (const Mat& L : lind.jumps) {
        if (lind.sigma.is_inf()) {
            out += L * rho * L.adjoint();
            continue;
        }
        auto nz = nonzeros(L);
        for (const Nz& x : nz)
            for (const Nz& y : nz) {
                double w = lind.sigma.weight(s, s.cluster_of(x.i, x.j), s.cluster_of(y.i, y.j));
                if (w != 0.0) out(x.i, y.i) += w * x.v * rho(x.j, y.j) * std::conj(y.v);
            }
    }
    return out;
}

Superoperator gkls_superop(const std::vector<Mat>& jumps, const Mat& G) {
    const int D = static_cast<int>(G.rows());
    Superoperator S;
    S.dim = D;
    const Mat I = Mat::Identity(D, D);
    S.matrix = Mat::Zero(static_cast<Eigen::Index>(D) * D, static_cast<Eigen::Index>(D) * D);
    for (const Mat& L : jumps) {
        Mat Lc = L.conjugate();
        for (int l = 0; l < D; ++l)
            for (int j = 0; j < D; ++j)
                if (Lc(j, l) != cplx(0)) S.matrix.block(j * D, l * D, D, D) += Lc(j, l) * L;
    }
    Mat Gc = G.conjugate();
    for (int l = 0; l < D; ++l) {
        S.matrix.block(l * D, l * D, D, D) += G;
        for (int j = 0; j < D; ++j)
            if (Gc(j, l) != cplx(0)) S.matrix.block(j * D, l * D, D, D).diagonal().array() += Gc(j, l);
    }
    return S;
}

// ---- diagnostics ----

double trace_norm(const Mat& X) {
    if ((X - X.adjoint()).cwiseAbs().maxCoeff() <= 1e-13 * (1.0 + X.cwiseAbs().maxCoeff())) {
        Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (X + X.adjoint()), Eigen::EigenvaluesOnly);
        return es.eigenvalues().cwiseAbs().sum();
    }
    return Eigen::BDCSVD<Mat>(X).singularValues().sum();
}

double trace_preservation_residual(const Superoperator& S) {
    const int D = S.dim;
    double top = S.matrix.cwiseAbs().maxCoeff(), r = 0.0;
    for (Eigen::Index c = 0; c < S.matrix.cols(); ++c) {
        cplx t = 0;
        for (int i = 0; i < D; ++i) t += S.matrix(vidx(i, i, D), c);
        r = std::max(r, std::abs(t));
    }
    return top > 0 ? r / top : r;
}

double one_to_one_estimate(const Superoperator& S) {
    const int D = S.dim;
    double best = 0.0;
    for (Eigen::Index c = 0; c < S.matrix.cols(); ++c)
        best = std::max(best, trace_norm(unvec(S.matrix.col(c), D)));
    return best;
}

double gibbs_residual(const Superoperator& S, const GibbsState& g, const SpectralData&) {
    Vec v = vec(g.weights.cast<cplx>().asDiagonal().toDenseMatrix());
    return trace_norm(unvec(S.matrix * v, S.dim));
}

// ---- integral forms ----

namespace {

double kernel_tail(const KernelSamples& k) {
    double top = 0.0;
    for (const cplx& v : k.values) top = std::max(top, std::abs(v));
    double edge = std::max(std::abs(k.values.front()), std::abs(k.values.back()));
    return top > 0 ? edge / top : 0.0;
}

// sum_k f(t_k) e^{i t_k nu} dt for every Bohr cluster
std::vector<cplx> cluster_transforms(const SpectralData& spec, const KernelSamples& k) {
    std::vector<cplx> out(spec.bohr.size());
    const double dt = k.dt();
    for (size_t c = 0; c < spec.bohr.size(); ++c) {
        const double nu = spec.bohr[c].nu;
        cplx s = 0.0;
        for (size_t m = 0; m < k.times.size(); ++m) s += k.values[m] * std::polar(1.0, nu * k.times[m]);
        out[c] = s * dt;
    }
    return out;
}

} // namespace

IntegralResult integral_jump(const SpectralData& spec, const Mat& A, const KernelSamples& f, double tol) {
    double tail = kernel_tail(f);
    if (tail > tol)
        throw PreconditionError("integral_jump: kernel window too short, relative tail " + std::to_string(tail),
                                "kernel covers [-T,T] with negligible tail");
    auto ft = cluster_transforms(spec, f);
    const int D = spec.dim();
    IntegralResult r;
    r.matrix = Mat::Zero(D, D);
    for (int j = 0; j < D; ++j)
        for (int i = 0; i < D; ++i)
            if (A(i, j) != cplx(0)) r.matrix(i, j) = ft[spec.cluster_of(i, j)] * A(i, j);
    r.error_estimate = tail * l1_norm(f) * A.cwiseAbs().maxCoeff();
    return r;
}

IntegralResult integral_drift(const SpectralData& spec, const std::vector<Mat>& jumps, const KernelSamples& g,
                              double tol) {
    double tail = kernel_tail(g);
    if (tail > tol)
        throw PreconditionError("integral_drift: kernel window too short, relative tail " + std::to_string(tail),
                                "kernel covers [-T,T] with negligible tail");
    auto gt = cluster_transforms(spec, g);
    const int D = spec.dim();
    Mat K = Mat::Zero(D, D);
    for (const Mat& L : jumps) K += L.adjoint() * L;
    IntegralResult r;
    r.matrix = Mat::Zero(D, D);
    for (int j = 0; j < D; ++j)
        for (int i = 0; i < D; ++i) r.matrix(i, j) = -gt[spec.cluster_of(i, j)] * K(i, j);
    r.error_estimate = tail * l1_norm(g) * K.cwiseAbs().maxCoeff();
    return r;
}

Superoperator gkls_at_time(const Lindbladian& lind, double t, const WindowFunction& w) {
    const SpectralData& s = *lind.spec;
    if (w.S < 4.0 * s.norm())
        throw PreconditionError("gkls_at_time: window scale must satisfy S >= 4 ||H||", "S >= 4||H_{<=M}||");
    const int D = s.dim();
    const double beta = lind.beta;
    Mat Bk = bohr_pair_sum(s, lind.jumps, [&](int c1, int c2) {
        return tanh_kernel_hat(beta, w, s.bohr[c2].nu - s.bohr[c1].nu);
    });
    Bk = 0.5 * (Bk + Bk.adjoint()).eval();
    Mat K = Mat::Zero(D, D);
    for (const Mat& L : lind.jumps) K += L.adjoint() * L;
    Mat ph(D, D);
    for (int j = 0; j < D; ++j)
        for (int i = 0; i < D; ++i) ph(i, j) = std::polar(1.0, t * s.nu(i, j));
    std::vector<Mat> X;
    for (const Mat& L : lind.jumps) X.push_back(L.cwiseProduct(ph));
    Mat G = (cplx(0, -1) * Bk - 0.5 * K).cwiseProduct(ph);
    return gkls_superop(X, G);
}

// ---- models ----

std::vector<double> ModelSpec::h(int M) const {
    std::vector<double> out(M + 1);
    for (int n = 0; n <= M; ++n) {
        if (name == "linear") out[n] = gamma * n;
        else if (name == "quadratic") out[n] = static_cast<double>(n) * n;
        else if (name == "mf_bh") out[n] = U * n * (n - 1) / 2.0;
        else if (name == "table") {
            if (n >= static_cast<int>(table.size()))
                throw PreconditionError("ModelSpec: h table shorter than M+1", "h tabulated on {0..M}");
            out[n] = table[n];
        } else
            throw PreconditionError("ModelSpec: unknown model '" + name + "'", "model in {linear, quadratic, mf_bh, table}");
    }
    return out;
}

BuiltModel build_model(const ModelSpec& m, int M) {
    BuiltModel b;
    b.space = FockSpace(1, M);
    auto h = m.h(M);
    b.H = m.name == "mf_bh" ? build_mf_hamiltonian(b.space, h, m.psi) : build_hN(b.space, h);
    b.spec = std::make_shared<const SpectralData>(eigendecompose(b.H));
    b.bare = {annihilation(b.space), creation(b.space)};
    for (const auto& A : b.bare) b.bare_eig.push_back(b.spec->to_eigen(A.matrix));
    return b;
}

} // namespace glab
