#include "glab/hs_spectral.hpp"

#include <boost/multiprecision/eigen.hpp>
#include <boost/multiprecision/mpfr.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <numeric>

namespace glab {

// ---- symmetrization ----

SymmetrizedGenerator kms_symmetrize(const Superoperator& L, const GibbsState& sigma, const SpectralData& spec) {
    const int D = L.dim;
    if (spec.dim() != D) throw PreconditionError("kms_symmetrize: dimension mismatch", "dims agree");
    SymmetrizedGenerator s;
    s.dim = D;
    s.beta = sigma.beta;
    s.energies = spec.energies;
    s.sigma_quarter = sigma.weights.array().pow(0.25);
    const double beta = sigma.beta;
    const RVec& E = spec.energies;
    const Eigen::Index n = static_cast<Eigen::Index>(D) * D;
    s.matrix = L.matrix;
    for (Eigen::Index c = 0; c < n; ++c) {
        const double ec = E(c % D) + E(c / D);
        for (Eigen::Index r = 0; r < n; ++r) {
            cplx& v = s.matrix(r, c);
            if (v == cplx(0)) continue;
            v *= std::exp(-beta * (ec - E(r % D) - E(r / D)) / 4.0);
        }
    }
    double num = 0.0, den = 0.0;
    for (Eigen::Index c = 0; c < n; ++c)
        for (Eigen::Index r = 0; r <= c; ++r) {
            cplx a = s.matrix(r, c), b = std::conj(s.matrix(c, r));
            num += (r == c ? 1.0 : 2.0) * std::norm(a - b);
            den += std::norm(a) + (r == c ? 0.0 : std::norm(s.matrix(c, r)));
            cplx m = 0.5 * (a + b);
            s.matrix(r, c) = m;
            s.matrix(c, r) = std::conj(m);
        }
    s.herm_residual = den > 0 ? std::sqrt(num / den) : 0.0;
    if (s.herm_residual > 1e-6)
        throw PreconditionError("kms_symmetrize: KMS symmetry violated - check filter", "KMS-compatible filter");
    return s;
}

// ---- block eigensolve ----

std::vector<BlockEigen> block_eigensolve(const Mat& M, bool with_vectors) {
    const int n = static_cast<int>(M.rows());
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (int c = 0; c < n; ++c)
        for (int r = 0; r < c; ++r)
            if (M(r, c) != cplx(0)) {
                int a = find(r), b = find(c);
                if (a != b) parent[std::max(a, b)] = std::min(a, b);
            }
    std::vector<std::vector<int>> groups(n);
    for (int i = 0; i < n; ++i) groups[find(i)].push_back(i);
    std::vector<BlockEigen> out;
    for (auto& g : groups) {
        if (g.empty()) continue;
        const int m = static_cast<int>(g.size());
        Mat B(m, m);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) B(a, b) = M(g[a], g[b]);
        Eigen::SelfAdjointEigenSolver<Mat> es(B, with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) throw std::runtime_error("block_eigensolve: eigensolver failed");
        BlockEigen be;
        be.idx = std::move(g);
        be.values = es.eigenvalues();
        if (with_vectors) be.vectors = es.eigenvectors();
        out.push_back(std::move(be));
    }
    return out;
}

Vec sqrt_sigma_vec(const SymmetrizedGenerator& sym) {
    const int D = sym.dim;
    Vec v = Vec::Zero(static_cast<Eigen::Index>(D) * D);
    for (int i = 0; i < D; ++i) v(vidx(i, i, D)) = sym.sigma_quarter(i) * sym.sigma_quarter(i);
    return v;
}

namespace {

void fill_low(GapReport& r, std::vector<double> vals) {
    std::sort(vals.begin(), vals.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    r.spectrum_low.assign(vals.begin(), vals.begin() + std::min<size_t>(kLowCount, vals.size()));
}

} // namespace

GapReport spectral_gap(const SymmetrizedGenerator& sym, double tau_rel) {
    auto blocks = block_eigensolve(sym.matrix, true);
    GapReport r;
    r.herm_residual = sym.herm_residual;
    r.beta = sym.beta;
    std::vector<double> all;
    for (const auto& b : blocks)
        for (Eigen::Index k = 0; k < b.values.size(); ++k) all.push_back(b.values(k));
    double rad = 0.0, top = -std::numeric_limits<double>::infinity();
    for (double v : all) { rad = std::max(rad, std::abs(v)); top = std::max(top, v); }
    r.spectral_radius = rad;
    r.max_eigenvalue = top;
    r.kernel_threshold = tau_rel * rad;
    r.gap = std::numeric_limits<double>::infinity();
    const Vec s = sqrt_sigma_vec(sym);
    double proj = 0.0;
    for (const auto& b : blocks)
        for (Eigen::Index k = 0; k < b.values.size(); ++k) {
            double v = b.values(k);
            if (std::abs(v) < r.kernel_threshold) {
                ++r.kernel_dim;
                cplx o = 0;
                for (size_t a = 0; a < b.idx.size(); ++a) o += std::conj(b.vectors(a, k)) * s(b.idx[a]);
                proj += std::norm(o);
            } else {
                r.gap = std::min(r.gap, std::abs(v));
            }
        }
    if (std::isinf(r.gap)) throw std::runtime_error("spectral_gap: empty non-kernel spectrum");
    r.log10_gap = std::log10(r.gap);
    r.kernel_overlap = proj / s.squaredNorm();
    fill_low(r, all);
    return r;
}

std::vector<double> distinct_low(const GapReport& r, double rel_tol) {
    std::vector<double> out;
    for (double v : r.spectrum_low) {
        double a = std::abs(v);
        if (a < r.kernel_threshold) continue;
        if (out.empty() || a - out.back() > rel_tol * a) out.push_back(a);
    }
    return out;
}

GapReport model_gap(const ModelInputs& in, GapMethod method, double tau_rel) {
    if (method == GapMethod::extended) return gap_number_preserving_hp(in);
    BuiltModel b = build_model(in.model, in.M);
    Lindbladian l = make_lindbladian(b.spec, b.bare_eig, in.filter, in.sigma);
    Superoperator S = superoperator(l);
    GibbsState g = gibbs(*b.spec, in.filter.beta);
    SymmetrizedGenerator sym = kms_symmetrize(S, g, *b.spec);
    S.matrix.resize(0, 0);
    GapReport r = spectral_gap(sym, tau_rel);
    r.sigma_E = in.sigma.str();
    r.M = in.M;
    r.filter = in.filter.name();
    r.beta = in.filter.beta;
    return r;
}

// ---- extended precision, number-preserving models ----

namespace {

using mp = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<0>, boost::multiprecision::et_off>;
using MPMat = Eigen::Matrix<mp, Eigen::Dynamic, Eigen::Dynamic>;
using MPVec = Eigen::Matrix<mp, Eigen::Dynamic, 1>;

std::mutex mp_precision_mutex;

} // namespace
} // namespace glab

// boost 1.74's NumTraits lacks infinity(), which Eigen's generic hypot needs
namespace Eigen::internal {
template <>
struct hypot_impl<glab::mp> {
    static glab::mp run(const glab::mp& x, const glab::mp& y) { return boost::multiprecision::hypot(x, y); }
};
} // namespace Eigen::internal

namespace glab {

GapReport gap_number_preserving_hp(const ModelInputs& in, int digits) {
    if (!in.model.number_preserving())
        throw PreconditionError("gap_number_preserving_hp: model must commute with N", "H = h(N)");
    if (!in.filter.builtin())
        throw PreconditionError("gap_number_preserving_hp: closed-form filter required", "built-in filter kind");
    const int M = in.M;
    const double beta = in.filter.beta;
    const auto h = in.model.h(M);
    const FilterFunction& f = in.filter;

    // dynamic range of the generator entries, in natural-log units
    double lo = 0.0, hi = -std::numeric_limits<double>::infinity();
    for (int n = 0; n < M; ++n) {
        double up = 2.0 * f.log_abs(h[n + 1] - h[n]), dn = 2.0 * f.log_abs(h[n] - h[n + 1]);
        lo = std::min({lo, up, dn});
        hi = std::max({hi, up + std::log(n + 1.0), dn + std::log(n + 1.0)});
    }
    double hmax = 0.0;
    for (double v : h) hmax = std::max(hmax, std::abs(v));
    if (digits <= 0) digits = static_cast<int>(std::ceil(2.0 * (hi - lo + beta * hmax) / std::log(10.0))) + 60;

    std::lock_guard<std::mutex> lock(mp_precision_mutex);
    const unsigned saved = mp::default_precision();
    mp::default_precision(digits);

    const double tol = 1e-9 * (1.0 + hmax);
    std::vector<mp> E(M + 1);
    for (int n = 0; n <= M; ++n) E[n] = mp(h[n]);
    // down[n] = L^a_{n-1,n}, up[n] = L^{a+}_{n+1,n}
    std::vector<mp> down(M + 1, mp(0)), up(M + 1, mp(0));
    for (int n = 1; n <= M; ++n) down[n] = sqrt(mp(n)) * f.eval_real<mp>(E[n - 1] - E[n]);
    for (int n = 0; n < M; ++n) up[n] = sqrt(mp(n + 1)) * f.eval_real<mp>(E[n + 1] - E[n]);
    std::vector<mp> G(M + 1);
    for (int n = 0; n <= M; ++n) G[n] = -(down[n] * down[n] + up[n] * up[n]) / 2;

    auto weight = [&](double nu1, double nu2) -> mp {
        if (in.sigma.is_inf()) return mp(1);
        if (in.sigma.is_zero()) return mp(std::abs(nu1 - nu2) <= tol ? 1 : 0);
        mp d = mp(nu1) - mp(nu2);
        return exp(-d * d / (8 * mp(in.sigma.value) * mp(in.sigma.value)));
    };

    GapReport r;
    r.method = "extended";
    r.sigma_E = in.sigma.str();
    r.M = M;
    r.filter = f.name();
    r.beta = beta;
    std::vector<mp> all;
    for (int d = -M; d <= M; ++d) {
        // states (i, i-d)
        std::vector<int> is;
        for (int i = 0; i <= M; ++i)
            if (i - d >= 0 && i - d <= M) is.push_back(i);
        const int m = static_cast<int>(is.size());
        MPVec diag(m), sub(std::max(m - 1, 1));
        for (int a = 0; a < m; ++a) {
            int i = is[a], j = i - d;
            diag(a) = G[i] + G[j];
        }
        for (int a = 0; a + 1 < m; ++a) {
            int i = is[a], j = i - d; // couples (i,j) and (i+1,j+1)
            // (i,j) <- (i+1,j+1) through a ; (i+1,j+1) <- (i,j) through a^dag
            mp c_dn = weight(h[i] - h[i + 1], h[j] - h[j + 1]) * down[i + 1] * down[j + 1] *
                      exp(-mp(beta) * (E[i + 1] + E[j + 1] - E[i] - E[j]) / 4);
            mp c_up = weight(h[i + 1] - h[i], h[j + 1] - h[j]) * up[i] * up[j] *
                      exp(-mp(beta) * (E[i] + E[j] - E[i + 1] - E[j + 1]) / 4);
            sub(a) = (c_dn + c_up) / 2;
        }
        if (m == 1) {
            all.push_back(diag(0));
            continue;
        }
        Eigen::SelfAdjointEigenSolver<MPMat> es;
        es.computeFromTridiagonal(diag, sub.head(m - 1), Eigen::EigenvaluesOnly);
        for (int k = 0; k < m; ++k) all.push_back(es.eigenvalues()(k));
    }
    mp rad = 0, top = all.front();
    for (const mp& v : all) {
        if (abs(v) > rad) rad = abs(v);
        if (v > top) top = v;
    }
    mp tau = rad * pow(mp(10), -(digits - 30));
    mp gap = -1;
    for (const mp& v : all) {
        if (abs(v) < tau) ++r.kernel_dim;
        else if (gap < 0 || abs(v) < gap) gap = abs(v);
    }
    if (gap < 0) throw std::runtime_error("gap_number_preserving_hp: empty non-kernel spectrum");
    r.gap = static_cast<double>(gap);
    if (r.gap == 0.0) r.gap = std::numeric_limits<double>::denorm_min(); // below double range
    r.kernel_threshold = static_cast<double>(tau);
    r.spectral_radius = static_cast<double>(rad);
    r.max_eigenvalue = static_cast<double>(top);
    r.kernel_overlap = std::numeric_limits<double>::quiet_NaN();
    std::sort(all.begin(), all.end(), [](const mp& a, const mp& b) { return abs(a) < abs(b); });
    for (size_t k = 0; k < std::min<size_t>(kLowCount, all.size()); ++k) r.spectrum_low.push_back(static_cast<double>(all[k]));
    r.log10_gap = static_cast<double>(log10(gap));
    r.herm_residual = 0.0;
    mp::default_precision(saved);
    return r;
}

// ---- scans ----

ScanResult gap_scan_sigma(const ModelInputs& in, const std::vector<SigmaE>& grid, GapMethod method, double slack) {
    ScanResult s;
    for (size_t k = 1; k < grid.size(); ++k)
        if (grid[k].as_double() < grid[k - 1].as_double())
            throw PreconditionError("gap_scan_sigma: grid must be ascending", "sigma grid ascending");
    for (const SigmaE& sg : grid) {
        ModelInputs x = in;
        x.sigma = sg;
        s.reports.push_back(model_gap(x, method));
    }
    for (size_t k = 1; k < s.reports.size(); ++k)
        if (s.reports[k].gap > s.reports[k - 1].gap + slack) s.monotone = false;
    return s;
}

ScanResult gap_scan_truncation(const ModelInputs& in, const std::vector<int>& M_grid, GapMethod method) {
    ScanResult s;
    for (size_t k = 1; k < M_grid.size(); ++k)
        if (M_grid[k] <= M_grid[k - 1])
            throw PreconditionError("gap_scan_truncation: M grid must be ascending", "M grid ascending");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int M : M_grid) {
        ModelInputs x = in;
        x.M = M;
        s.reports.push_back(model_gap(x, method));
        double y = s.reports.back().log10_gap * std::log(10.0);
        sx += M; sy += y; sxx += double(M) * M; sxy += M * y;
    }
    const double n = static_cast<double>(M_grid.size());
    s.trend = n > 1 ? (n * sxy - sx * sy) / (n * sxx - sx * sx) : 0.0;
    for (size_t k = 1; k < s.reports.size(); ++k)
        if (s.reports[k].log10_gap > s.reports[k - 1].log10_gap) s.monotone = false;
    return s;
}

double dirichlet_form(const SymmetrizedGenerator& sym, const Vec& x) {
    if (x.norm() == 0.0) throw PreconditionError("dirichlet_form: x must be nonzero", "x != 0");
    cplx v = -x.dot(sym.matrix * x);
    double scale = x.squaredNorm() * sym.matrix.cwiseAbs().maxCoeff();
    if (std::abs(v.imag()) > 1e-10 * std::max(std::abs(v.real()), scale))
        throw std::runtime_error("dirichlet_form: imaginary residue exceeds tolerance");
    return v.real();
}

// ---- coercivity and phase retrieval ----

double cosh_kernel(double beta, double s) {
    double x = std::abs(beta * s / 4.0);
    return x > 700 ? 0.0 : 1.0 / (2.0 * std::cosh(x));
}

CoercivityReport coercivity_constants(const std::vector<double>& bohr, double beta, double delta) {
    if (!(delta > 0)) throw PreconditionError("coercivity_constants: delta must be positive", "delta > 0");
    if (!(beta > 0)) throw PreconditionError("coercivity_constants: beta must be positive", "beta > 0");
    CoercivityReport r;
    for (size_t a = 0; a < bohr.size(); ++a) {
        double s = 0.0;
        for (size_t b = 0; b < bohr.size(); ++b)
            if (a != b) s += cosh_kernel(beta, bohr[a] - bohr[b]);
        r.M_beta = std::max(r.M_beta, s);
    }
    double S = 0.0;
    for (int m = 1;; ++m) {
        double t = 2.0 * cosh_kernel(beta, m * delta);
        S += t;
        if (t < 1e-16) break;
    }
    r.S_beta = S;
    r.c_beta = 0.5 - S;
    return r;
}

Mat riesz_matrix(const std::vector<double>& a, double omega, double beta, double theta) {
    const int R = static_cast<int>(a.size());
    Mat Mt(R, R);
    for (int r = 0; r < R; ++r)
        for (int s = 0; s < R; ++s) {
            const double base = a[r] - a[s];
            cplx sum = cosh_kernel(beta, base);
            for (int l = 1;; ++l) {
                double kp = cosh_kernel(beta, base + l * omega), km = cosh_kernel(beta, base - l * omega);
                sum += kp * std::polar(1.0, -l * theta) + km * std::polar(1.0, l * theta);
                if (kp < 1e-16 && km < 1e-16 && l * omega > std::abs(base)) break;
            }
            Mt(r, s) = sum;
        }
    return Mt;
}

RieszResult riesz_constant(const std::vector<double>& a, double omega, double beta, int theta_samples) {
    if (theta_samples < 64) throw PreconditionError("riesz_constant: at least 64 theta samples", "theta_samples >= 64");
    if (!(omega > 0)) throw PreconditionError("riesz_constant: omega must be positive", "omega > 0");
    for (size_t r = 0; r < a.size(); ++r)
        for (size_t s = r + 1; s < a.size(); ++s) {
            double d = std::fmod(std::abs(a[r] - a[s]), omega);
            if (std::min(d, omega - d) < 1e-12)
                throw PreconditionError("riesz_constant: duplicate residues", "a_r pairwise distinct mod omega");
        }
    auto lam = [&](double th) {
        Eigen::SelfAdjointEigenSolver<Mat> es(riesz_matrix(a, omega, beta, th), Eigen::EigenvaluesOnly);
        return es.eigenvalues()(0);
    };
    const double pi = std::numbers::pi, h = 2.0 * pi / theta_samples;
    double best = std::numeric_limits<double>::infinity(), bt = 0.0;
    for (int k = 0; k < theta_samples; ++k) {
        double th = -pi + k * h, v = lam(th);
        if (v < best) { best = v; bt = th; }
    }
    // golden-section refinement on the bracketing cell pair
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = bt - h, hi = bt + h;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo), f1 = lam(x1), f2 = lam(x2);
    for (int it = 0; it < 80; ++it) {
        if (f1 < f2) { hi = x2; x2 = x1; f2 = f1; x1 = hi - g * (hi - lo); f1 = lam(x1); }
        else { lo = x1; x1 = x2; f1 = f2; x2 = lo + g * (hi - lo); f2 = lam(x2); }
    }
    double xm = 0.5 * (lo + hi), fm = lam(xm);
    RieszResult res;
    if (fm < best) { res.A = fm; res.theta = xm; } else { res.A = best; res.theta = bt; }
    return res;
}

} // namespace glab

namespace glab {

double coercive_form(const std::vector<double>& bohr, double beta, const std::vector<Vec>& x) {
    double s = 0.0;
    for (size_t a = 0; a < bohr.size(); ++a)
        for (size_t b = 0; b < bohr.size(); ++b) s += cosh_kernel(beta, bohr[a] - bohr[b]) * x[a].dot(x[b]).real();
    return s;
}

double riesz_integral(const std::vector<double>& nus, const std::vector<Vec>& c, double beta) {
    double numax = 0.0;
    for (double n : nus) numax = std::max(numax, std::abs(n));
    const double T = 20.0 * beta;
    const double h = std::min(beta / 200.0, 3.14159265358979323846 / (16.0 * (numax + 1.0)));
    const long K = static_cast<long>(std::ceil(T / h));
    double s = 0.0;
    for (long k = -K; k <= K; ++k) {
        const double t = k * h;
        Vec acc = Vec::Zero(c.front().size());
        for (size_t a = 0; a < nus.size(); ++a) acc += c[a] * std::polar(1.0, t * nus[a]);
        s += acc.squaredNorm() / (beta * std::cosh(2.0 * 3.14159265358979323846 * t / beta));
    }
    return s * h;
}

} // namespace glab
