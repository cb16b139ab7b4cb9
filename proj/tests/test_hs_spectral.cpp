#include "gen.hpp"

#include "glab/hs_spectral.hpp"

#include <unsupported/Eigen/KroneckerProduct>
#include <doctest.h>

#include <cmath>

using namespace glab;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

Mat lr(const Mat& A, const Mat& B) { return Eigen::kroneckerProduct(Mat(B.transpose()), A).eval(); }

ModelInputs inputs(const std::string& name, FilterFunction f, SigmaE s, int M) {
    ModelInputs in;
    in.model.name = name;
    in.filter = std::move(f);
    in.sigma = s;
    in.M = M;
    return in;
}

SymmetrizedGenerator symmetrized(const ModelInputs& in) {
    auto b = build_model(in.model, in.M);
    auto [lind, S] = assemble(b.spec, b.bare, in.filter, in.sigma);
    return kms_symmetrize(S, gibbs(*b.spec, in.filter.beta), *b.spec);
}

// 1 - |<v, w>|^2 / |v|^2 |w|^2
double misalignment(const Vec& v, const Vec& w) { return 1.0 - std::norm(v.dot(w)) / (v.squaredNorm() * w.squaredNorm()); }

} // namespace

TEST_CASE("qOU symmetrized generator in closed form") {
    const int M = 12;
    auto in = inputs("linear", metropolis(1.0), SigmaE::inf(), M);
    auto sym = symmetrized(in);
    const double np = std::exp(-(std::sqrt(2.0) + 1) / 2), nm = std::exp(-(std::sqrt(2.0) - 1) / 2);
    FockSpace sp(1, M);
    Mat a = annihilation(sp).matrix, ad = creation(sp).matrix, I = Mat::Identity(M + 1, M + 1);
    // on the truncated space N + 1 is replaced by a a^dag
    Mat want = -0.5 * nm * (lr(ad * a, I) + lr(I, ad * a)) - 0.5 * np * (lr(a * ad, I) + lr(I, a * ad)) +
               std::sqrt(np * nm) * (lr(a, ad) + lr(ad, a));
    CHECK((sym.matrix - want).norm() <= 1e-10 * want.norm());
    CHECK(sym.herm_residual <= 1e-12);
    CHECK((sym.matrix * sqrt_sigma_vec(sym)).norm() <= 1e-10);

    auto r = spectral_gap(sym);
    CHECK(r.kernel_dim == 1);
    CHECK(r.kernel_overlap >= 1 - 1e-8);
    CHECK(r.max_eigenvalue <= 1e-10 * r.spectral_radius);
}

TEST_CASE("qOU gap approaches (nu_- - nu_+)/2") {
    const double want = (std::exp(-(std::sqrt(2.0) - 1) / 2) - std::exp(-(std::sqrt(2.0) + 1) / 2)) / 2;
    CHECK(want == doctest::Approx(0.256936).epsilon(1e-6));
    auto r = model_gap(inputs("linear", metropolis(1.0), SigmaE::inf(), 30));
    CHECK(r.gap == doctest::Approx(want).epsilon(1e-6));
    auto low = distinct_low(r);
    REQUIRE(low.size() >= 3);
    for (int n = 1; n <= 3; ++n) CHECK(std::abs(low[n - 1]) == doctest::Approx(n * want).epsilon(1e-5));

    auto s = gap_scan_truncation(inputs("linear", metropolis(1.0), SigmaE::inf(), 0), {20, 40});
    CHECK(std::abs(s.reports[1].gap / s.reports[0].gap - 1) <= 0.01);
}

TEST_CASE("symmetric-rate surrogate loses its gap") {
    // even, non-KMS filter at beta = 0 gives nu_+ = nu_-
    auto even = custom_filter(0.0, [](double nu) { return cplx(std::exp(-nu * nu / 4)); });
    std::vector<double> gaps;
    for (int M : {5, 10, 20, 30, 60}) gaps.push_back(model_gap(inputs("linear", even, SigmaE::inf(), M)).gap);
    for (size_t k = 1; k < gaps.size(); ++k) CHECK(gaps[k] < gaps[k - 1]);
    // roughly 1/M decay; no positive floor
    CHECK(gaps[4] < 0.6 * gaps[3]);
    CHECK(gaps[4] * 60 < 1.5 * gaps[2] * 20);
}

TEST_CASE("hermiticity and kernel on N^2") {
    auto sym = symmetrized(inputs("quadratic", metropolis(1.0), SigmaE::of(1.0), 10));
    CHECK(sym.herm_residual <= 1e-10);
    auto r = spectral_gap(sym);
    CHECK(r.kernel_dim == 1);
    CHECK(r.kernel_overlap >= 1 - 1e-8);
    CHECK(r.gap > r.kernel_threshold);
    CHECK(r.max_eigenvalue <= 1e-10 * r.spectral_radius);
}

TEST_CASE("non-KMS filter is rejected by symmetrization") {
    auto broken = custom_filter(1.0, [](double nu) { return cplx(std::exp(-nu * nu)); });
    CHECK_THROWS_WITH(symmetrized(inputs("quadratic", broken, SigmaE::inf(), 6)), doctest::Contains("KMS symmetry violated"));
}

TEST_CASE("gap monotone in sigma_E") {
    auto grid = std::vector<SigmaE>{SigmaE::zero(), SigmaE::of(1.0), SigmaE::inf()};
    auto s = gap_scan_sigma(inputs("linear", metropolis(1.0), SigmaE::inf(), 15), grid);
    CHECK(s.monotone);
    auto g = gap_scan_sigma(inputs("linear", metropolis(1.0), SigmaE::inf(), 15), grid);
    CHECK(std::abs(g.reports[0].gap - g.reports[2].gap) <= 1e-12);
    CHECK(std::abs(g.reports[1].gap - g.reports[2].gap) <= 1e-12);

    for (auto f : {metropolis(1.0), gaussian(1.0, 1.0), metropolis_regularized(1.0, 0.05, 0.3)}) {
        auto q = gap_scan_sigma(inputs("quadratic", f, SigmaE::inf(), 8),
                                {SigmaE::zero(), SigmaE::of(0.5), SigmaE::of(1.0), SigmaE::of(4.0), SigmaE::inf()});
        CHECK(q.monotone);
    }
    CHECK_THROWS_AS(gap_scan_sigma(inputs("linear", metropolis(1.0), SigmaE::inf(), 5), {SigmaE::inf(), SigmaE::zero()}),
                    PreconditionError);
}

TEST_CASE("gaussian N^2 gap: sigma_E dependence at M = 12") {
    auto q = gap_scan_sigma(inputs("quadratic", gaussian(1.0, 1.0), SigmaE::inf(), 12), {SigmaE::zero(), SigmaE::inf()},
                            GapMethod::extended);
    // the gap sits near 1e-109, set by the top-level death rate, so the sigma_E effect is relative
    CHECK(q.monotone);
    CHECK(q.reports[0].gap >= q.reports[1].gap * (1 - 1e-10));
    CHECK(q.reports[1].gap > 0);
    CHECK(q.reports[1].gap < 1e-100);
}

TEST_CASE("truncation scans on N^2") {
    std::vector<int> grid{8, 12, 16, 20, 24};
    auto g = gap_scan_truncation(inputs("quadratic", gaussian(1.0, 1.0), SigmaE::inf(), 0), grid, GapMethod::extended);
    CHECK(g.monotone);
    CHECK(g.reports.back().gap < 0.5 * g.reports.front().gap);
    CHECK(g.trend < 0);

    auto m = gap_scan_truncation(inputs("quadratic", metropolis(1.0), SigmaE::inf(), 0), grid);
    double lo = inf, hi = 0;
    for (const auto& r : m.reports) { lo = std::min(lo, r.gap); hi = std::max(hi, r.gap); }
    CHECK(lo >= 0.8 * hi);
}

TEST_CASE("extended precision agrees with dense where both resolve") {
    for (auto in : {inputs("linear", metropolis(1.0), SigmaE::inf(), 10), inputs("quadratic", metropolis(1.0), SigmaE::inf(), 8),
                    inputs("quadratic", gaussian(1.0, 2.0), SigmaE::inf(), 5)}) {
        double d = model_gap(in).gap, e = model_gap(in, GapMethod::extended).gap;
        CHECK(e == doctest::Approx(d).epsilon(1e-7));
    }
}

TEST_CASE("Dirichlet form") {
    auto sym = symmetrized(inputs("quadratic", metropolis(1.0), SigmaE::of(1.0), 6));
    const Vec s = sqrt_sigma_vec(sym);
    CHECK(std::abs(dirichlet_form(sym, s)) <= 1e-10);
    const double nrm = sym.matrix.norm();
    auto r = spectral_gap(sym);
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (sym.matrix + sym.matrix.adjoint()));
    // eigenvalues ascending; the kernel is the top one
    const Eigen::Index n = es.eigenvalues().size();
    const Vec second = es.eigenvectors().col(n - 2);
    CHECK(misalignment(es.eigenvectors().col(n - 1), s) <= 1e-8);
    CHECK(dirichlet_form(sym, second) == doctest::Approx(r.gap).epsilon(1e-8));
    for (int k = 0; k < 50; ++k) {
        Vec x = gen::complex_vector(static_cast<int>(s.size()));
        CHECK(dirichlet_form(sym, x) >= -1e-10 * x.squaredNorm() * nrm);
        Vec y = x - s * (s.dot(x) / s.squaredNorm());
        CHECK(dirichlet_form(sym, y) / y.squaredNorm() >= r.gap - 1e-8);
    }
    CHECK_THROWS_AS(dirichlet_form(sym, Vec::Zero(s.size())), PreconditionError);
}

TEST_CASE("coercivity constants") {
    auto r = coercivity_constants({0.0, 1.0, 2.0}, 8.0, 1.0);
    double S = 0.0;
    for (int m = 1; m < 40; ++m) S += 1.0 / std::cosh(2.0 * m);
    CHECK(r.S_beta == doctest::Approx(S).epsilon(1e-14));
    CHECK(r.S_beta == doctest::Approx(0.30812).epsilon(2e-4));
    CHECK(r.c_beta == doctest::Approx(0.19188).epsilon(5e-4));
    CHECK(r.c_beta == doctest::Approx(0.5 - r.S_beta).epsilon(1e-15));

    auto cold = coercivity_constants({0.0, 1.0, 2.0}, 200.0, 1.0);
    CHECK(std::abs(cold.c_beta - 0.5) <= 1e-10);
    CHECK(cosh_kernel(4.0, 0.0) == 0.5);
    CHECK_THROWS_AS(coercivity_constants({0.0}, 1.0, 0.0), PreconditionError);
}

TEST_CASE("property: coercive form bound") {
    for (int trial = 0; trial < 20; ++trial) {
        const double beta = gen::uniform(4.0, 12.0), delta = gen::uniform(0.8, 2.0);
        std::vector<double> bohr;
        double nu = gen::uniform(-3, 0);
        for (int k = 0, n = gen::integer(2, 7); k < n; ++k) {
            bohr.push_back(nu);
            nu += delta + gen::uniform(0.0, 1.0);
        }
        auto r = coercivity_constants(bohr, beta, delta);
        if (!(r.M_beta < 0.5)) continue;
        std::vector<Vec> x;
        double sq = 0.0;
        for (size_t k = 0; k < bohr.size(); ++k) {
            x.push_back(gen::complex_vector(3));
            sq += x.back().squaredNorm();
        }
        CHECK(coercive_form(bohr, beta, x) >= (0.5 - r.M_beta) * sq - 1e-12 * sq);
        CHECK(coercive_form(bohr, beta, x) >= r.c_beta * sq - 1e-12 * sq);
    }
}

TEST_CASE("phase retrieval constant") {
    const double beta = 4.0;
    SUBCASE("single residue") {
        const double omega = 1.0;
        auto r = riesz_constant({0.0}, omega, beta);
        CHECK(r.A > 0);
        double direct = cosh_kernel(beta, 0.0);
        for (int l = 1; l < 200; ++l) direct += 2 * cosh_kernel(beta, l * omega) * std::cos(l * r.theta);
        CHECK(r.A == doctest::Approx(direct).epsilon(1e-12));
    }
    SUBCASE("wide lattice limit") {
        std::vector<double> a{0.0, 0.7, 2.1};
        auto r = riesz_constant(a, 1e4 / beta, beta);
        Mat G(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) G(i, j) = cosh_kernel(beta, a[i] - a[j]);
        CHECK(r.A == doctest::Approx(Eigen::SelfAdjointEigenSolver<Mat>(G).eigenvalues()(0)).epsilon(1e-10));
    }
    SUBCASE("integral inequality on the lattice") {
        std::vector<double> a{0.0, 0.4};
        const double omega = 1.5;
        auto r = riesz_constant(a, omega, beta);
        for (int trial = 0; trial < 5; ++trial) {
            std::vector<double> nus;
            std::vector<Vec> c;
            double sq = 0.0;
            for (int l = -2; l <= 2; ++l)
                for (double ar : a) {
                    nus.push_back(ar + l * omega);
                    c.push_back(gen::complex_vector(2));
                    sq += c.back().squaredNorm();
                }
            CHECK(riesz_integral(nus, c, beta) - r.A * sq >= -1e-8);
        }
    }
    CHECK_THROWS_AS(riesz_constant({0.0, 1.0}, 1.0, beta), PreconditionError);
    CHECK_THROWS_AS(riesz_constant({0.0}, 1.0, beta, 10), PreconditionError);
}

TEST_CASE("riesz integral reproduces the cosh kernel") {
    // int w(t) |c1 e^{it nu1} + c2 e^{it nu2}|^2 = sum k(nu_i - nu_j) conj(c_i) c_j
    const double beta = 2.0;
    std::vector<double> nus{0.3, -1.1};
    std::vector<Vec> c{Vec::Constant(1, cplx(1.0, 0.5)), Vec::Constant(1, cplx(-0.2, 0.8))};
    CHECK(riesz_integral(nus, c, beta) == doctest::Approx(coercive_form(nus, beta, c)).epsilon(1e-9));
}
