#include "glab/fock.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace glab {

FockSpace::FockSpace(int m, int M) : modes(m), cutoff(M) {
    if (m < 1) throw PreconditionError("FockSpace: modes must be >= 1", "modes >= 1");
    if (M < 1) throw PreconditionError("FockSpace: cutoff must be >= 1", "cutoff >= 1");
    dim = 1;
    for (int i = 0; i < m; ++i) dim *= (M + 1);
}

TruncatedOperator TruncatedOperator::adjoint() const {
    return {space, matrix.adjoint(), label + "^dag"};
}

// ---- ladder operators ----

namespace {

Mat kron(const Mat& A, const Mat& B) {
    Mat out(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return out;
}

// embed a single-mode matrix at `mode`; mode 0 is the slowest index
Mat embed_local(const FockSpace& space, const Mat& local, int mode) {
    const int d = space.cutoff + 1;
    Mat out = Mat::Identity(1, 1);
    for (int q = 0; q < space.modes; ++q)
        out = kron(out, q == mode ? local : Mat(Mat::Identity(d, d)));
    return out;
}

} // namespace

TruncatedOperator annihilation(const FockSpace& space, int mode, int power) {
    if (mode < 0 || mode >= space.modes)
        throw PreconditionError("annihilation: mode out of range", "mode < modes");
    if (power < 1) throw PreconditionError("annihilation: power must be positive", "k >= 1");
    if (power > space.cutoff)
        throw PreconditionError("annihilation: power exceeds cutoff", "k <= cutoff");
    const int d = space.cutoff + 1;
    Mat a = Mat::Zero(d, d);
    for (int n = power; n < d; ++n) {
        double lg = std::lgamma(n + 1.0) - std::lgamma(n - power + 1.0);
        a(n - power, n) = std::exp(0.5 * lg);
    }
    std::string lab = "a_" + std::to_string(mode);
    if (power > 1) lab += "^" + std::to_string(power);
    return {space, embed_local(space, a, mode), lab};
}

TruncatedOperator creation(const FockSpace& space, int mode, int power) {
    return annihilation(space, mode, power).adjoint();
}

TruncatedOperator number_op(const FockSpace& space, int mode) {
    const int d = space.cutoff + 1;
    Mat n = Mat::Zero(d, d);
    for (int i = 0; i < d; ++i) n(i, i) = i;
    return {space, embed_local(space, n, mode), "N_" + std::to_string(mode)};
}

// ---- Hamiltonians ----

TruncatedOperator build_hN(const FockSpace& space, const std::vector<double>& h) {
    if (space.modes != 1) throw PreconditionError("build_hN: single mode only", "m = 1");
    if (static_cast<int>(h.size()) < space.cutoff + 1)
        throw PreconditionError("build_hN: table shorter than cutoff+1", "h tabulated on {0..M}");
    Mat H = Mat::Zero(space.dim, space.dim);
    for (int n = 0; n < space.dim; ++n) H(n, n) = h[n];
    return {space, H, "H"};
}

TruncatedOperator build_hN(const FockSpace& space, const std::function<double(int)>& h) {
    std::vector<double> tab(space.cutoff + 1);
    for (int n = 0; n <= space.cutoff; ++n) tab[n] = h(n);
    return build_hN(space, tab);
}

TruncatedOperator build_mf_hamiltonian(const FockSpace& space, const std::vector<double>& h, cplx psi) {
    TruncatedOperator H = build_hN(space, h);
    Mat a = annihilation(space).matrix;
    H.matrix += std::conj(psi) * a + psi * a.adjoint();
    return H;
}

// ---- spectral data ----

double SpectralData::norm() const {
    return energies.size() ? energies.cwiseAbs().maxCoeff() : 0.0;
}

int SpectralData::find_cluster(double nu) const {
    auto it = std::lower_bound(bohr.begin(), bohr.end(), nu - bohr_tol,
                               [](const BohrCluster& c, double v) { return c.nu < v; });
    if (it != bohr.end() && std::abs(it->nu - nu) <= bohr_tol)
        return static_cast<int>(it - bohr.begin());
    return -1;
}

Mat SpectralData::to_eigen(const Mat& A) const {
    if (diagonal_input) {
        // plain permutation keeps exact entries exact
        Mat out(A.rows(), A.cols());
        for (int i = 0; i < dim(); ++i)
            for (int j = 0; j < dim(); ++j) out(i, j) = A(perm[i], perm[j]);
        return out;
    }
    return vectors.adjoint() * A * vectors;
}

Mat SpectralData::from_eigen(const Mat& A) const {
    if (diagonal_input) {
        Mat out(A.rows(), A.cols());
        for (int i = 0; i < dim(); ++i)
            for (int j = 0; j < dim(); ++j) out(perm[i], perm[j]) = A(i, j);
        return out;
    }
    return vectors * A * vectors.adjoint();
}

SpectralData eigendecompose(const TruncatedOperator& Hop, double eps_deg, double eps_bohr) {
    const Mat& H = Hop.matrix;
    const int D = static_cast<int>(H.rows());
    if (D == 0 || H.cols() != D) throw PreconditionError("eigendecompose: square input required", "H square");
    double hn = H.cwiseAbs().maxCoeff();
    if ((H - H.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * std::max(hn, 1e-300))
        throw PreconditionError("eigendecompose: input is not Hermitian", "H Hermitian within 1e-12 ||H||");

    SpectralData s;
    s.degeneracy_tol = eps_deg;
    bool diag = true;
    for (int i = 0; i < D && diag; ++i)
        for (int j = 0; j < D; ++j)
            if (i != j && H(i, j) != cplx(0)) { diag = false; break; }

    if (diag) {
        std::vector<int> p(D);
        std::iota(p.begin(), p.end(), 0);
        std::stable_sort(p.begin(), p.end(), [&](int a, int b) { return H(a, a).real() < H(b, b).real(); });
        s.energies.resize(D);
        s.vectors = Mat::Zero(D, D);
        for (int c = 0; c < D; ++c) {
            s.energies(c) = H(p[c], p[c]).real();
            s.vectors(p[c], c) = 1.0;
        }
        s.diagonal_input = true;
        s.perm = p;
    } else {
        Eigen::SelfAdjointEigenSolver<Mat> es(H);
        if (es.info() != Eigen::Success) throw std::runtime_error("eigendecompose: eigensolver failed");
        s.energies = es.eigenvalues();
        s.vectors = es.eigenvectors();
        for (int c = 0; c < D; ++c) {
            Eigen::Index r;
            s.vectors.col(c).cwiseAbs().maxCoeff(&r);
            cplx ph = s.vectors(r, c) / std::abs(s.vectors(r, c));
            s.vectors.col(c) *= std::conj(ph);
        }
    }

    const double Hn = s.norm();
    s.bohr_tol = eps_bohr < 0 ? 1e-9 * (1.0 + Hn) : eps_bohr;

    // single-linkage clustering of all ordered differences
    struct Item { double v; int i, j; };
    std::vector<Item> items;
    items.reserve(static_cast<size_t>(D) * D);
    for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j) items.push_back({s.energies(i) - s.energies(j), i, j});
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
        return a.v < b.v || (a.v == b.v && (a.i < b.i || (a.i == b.i && a.j < b.j)));
    });
    s.cluster_of.resize(D, D);
    std::vector<double> sums;
    double prev = 0.0;
    for (size_t k = 0; k < items.size(); ++k) {
        if (k == 0 || items[k].v - prev > s.bohr_tol) {
            if (k > 0 && items[k].v - prev <= 2.0 * s.bohr_tol) s.ambiguous = true;
            s.bohr.push_back({});
            sums.push_back(0.0);
        }
        s.bohr.back().pairs.push_back({items[k].i, items[k].j});
        sums.back() += items[k].v;
        s.cluster_of(items[k].i, items[k].j) = static_cast<int>(s.bohr.size()) - 1;
        prev = items[k].v;
    }
    const int nc = static_cast<int>(s.bohr.size());
    s.mirror.resize(nc);
    for (int c = 0; c < nc; ++c) {
        auto [i, j] = s.bohr[c].pairs.front();
        s.mirror[c] = s.cluster_of(j, i);
    }
    std::vector<double> mean(nc);
    for (int c = 0; c < nc; ++c) mean[c] = sums[c] / static_cast<double>(s.bohr[c].pairs.size());
    // exact antisymmetry so that (A_nu)^dag = (A^dag)_{-nu} holds bitwise
    for (int c = 0; c < nc; ++c) s.bohr[c].nu = 0.5 * (mean[c] - mean[s.mirror[c]]);
    return s;
}

Mat energy_jump_eigen(const SpectralData& spec, const Mat& A_eig, int cluster) {
    Mat out = Mat::Zero(A_eig.rows(), A_eig.cols());
    for (auto [i, j] : spec.bohr.at(cluster).pairs) out(i, j) = A_eig(i, j);
    return out;
}

TruncatedOperator energy_jump(const SpectralData& spec, const TruncatedOperator& A, double nu) {
    int c = spec.find_cluster(nu);
    if (c < 0) throw PreconditionError("energy_jump: frequency not in Bohr table", "nu in spec.bohr");
    Mat Ae = energy_jump_eigen(spec, spec.to_eigen(A.matrix), c);
    return {A.space, spec.from_eigen(Ae), A.label + "_nu"};
}

} // namespace glab
