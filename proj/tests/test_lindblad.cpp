#include "gen.hpp"

#include "glab/lindblad.hpp"

#include <unsupported/Eigen/KroneckerProduct>
#include <doctest.h>

#include <cmath>

using namespace glab;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

// X -> A X B in column-stacking form
Mat lr(const Mat& A, const Mat& B) { return Eigen::kroneckerProduct(Mat(B.transpose()), A).eval(); }

Mat dissipator(const Mat& L) {
    const int D = static_cast<int>(L.rows());
    Mat I = Mat::Identity(D, D), K = L.adjoint() * L;
    return lr(L, L.adjoint()) - 0.5 * lr(K, I) - 0.5 * lr(I, K);
}

BuiltModel linear(double g, int M) {
    ModelSpec m;
    m.name = "linear";
    m.gamma = g;
    return build_model(m, M);
}

BuiltModel quadratic(int M) {
    ModelSpec m;
    m.name = "quadratic";
    return build_model(m, M);
}

Mat superop_of(const Lindbladian& l) { return superoperator(l).matrix; }

} // namespace

TEST_CASE("column-stacking identity") {
    Mat A = gen::complex_matrix(3, 3), B = gen::complex_matrix(3, 3), X = gen::complex_matrix(3, 3);
    CHECK((lr(A, B) * vec(X) - vec(A * X * B)).norm() < 1e-13);
    CHECK(vidx(1, 2, 3) == 7);
    CHECK((unvec(vec(X), 3) - X).norm() == 0.0);
}

TEST_CASE("gibbs state") {
    auto b = linear(1.0, 20);
    auto g = gibbs(*b.spec, std::log(2.0));
    CHECK(g.matrix(0, 0).real() == doctest::Approx(0.5 / (1.0 - std::pow(2.0, -21))).epsilon(1e-14));
    CHECK(std::abs(g.matrix.trace() - 1.0) < 1e-14);
    for (int n = 1; n <= 20; ++n) CHECK(g.weights(n) == doctest::Approx(g.weights(n - 1) / 2).epsilon(1e-14));
    Mat H = b.H.matrix;
    CHECK((H * g.matrix - g.matrix * H).norm() < 1e-12);

    // unit gap and ||H|| = 8, so the excited weight is ~exp(-25)
    auto lin = linear(1.0, 8);
    auto cold = gibbs(*lin.spec, 200.0 / lin.spec->norm());
    Mat P = Mat::Zero(9, 9);
    P(0, 0) = 1.0;
    CHECK(trace_norm(cold.matrix - P) <= 1e-10);
    CHECK(Eigen::SelfAdjointEigenSolver<Mat>(cold.matrix).eigenvalues().minCoeff() >= -1e-15);
}

TEST_CASE("filtered jumps for the linear oscillator") {
    const double gam = 0.7;
    auto b = linear(gam, 10);
    auto f = metropolis(1.3);
    Mat Lp = filtered_jump(*b.spec, b.bare[1], f);
    Mat Lm = filtered_jump(*b.spec, b.bare[0], f);
    CHECK((Lp - f(gam) * b.bare[1].matrix).norm() < 1e-14);
    CHECK((Lm - f(-gam) * b.bare[0].matrix).norm() < 1e-14);

    auto one = custom_filter(1.0, [](double) { return cplx(1.0); });
    auto q = quadratic(7);
    CHECK((filtered_jump(*q.spec, q.bare[0], one) - q.bare[0].matrix).norm() < 1e-14);
}

TEST_CASE("qOU generator in closed form") {
    for (double gam : {0.5, 1.0, 2.0}) {
        for (auto sigma : {SigmaE::inf(), SigmaE::of(1.0), SigmaE::zero()}) {
            auto b = linear(gam, 9);
            auto f = metropolis(1.0);
            auto [lind, S] = assemble(b.spec, b.bare, f, sigma);
            const double np = std::norm(f(gam)), nm = std::norm(f(-gam));
            Mat a = b.bare[0].matrix, ad = b.bare[1].matrix;
            Mat want = nm * dissipator(a) + np * dissipator(ad);
            CHECK((S.matrix - want).norm() <= 1e-12 * want.norm());
            CHECK((lind.drift + 0.5 * (np * a * ad + nm * ad * a)).norm() < 1e-13);
            CHECK(lind.coherent.norm() < 1e-15);
        }
    }
}

TEST_CASE("drift against the cosh-weight summation") {
    auto q = quadratic(6);
    const SpectralData& s = *q.spec;
    const double beta = 0.8;
    auto f = metropolis(beta);
    for (double sig : {0.5, 2.0, inf}) {
        Mat G = Mat::Zero(7, 7);
        for (const auto& A : q.bare)
            for (const auto& c1 : s.bohr)
                for (const auto& c2 : s.bohr) {
                    Mat A1 = energy_jump(s, A, c1.nu).matrix, A2 = energy_jump(s, A, c2.nu).matrix;
                    if (A1.norm() == 0 || A2.norm() == 0) continue;
                    const double d = c1.nu - c2.nu;
                    double w = std::isinf(sig) ? 1.0 : std::exp(-d * d / (8 * sig * sig));
                    w *= std::exp(beta * d / 4) / (2 * std::cosh(beta * d / 4));
                    G -= w * std::conj(f(c1.nu)) * f(c2.nu) * A1.adjoint() * A2;
                }
        Mat got = drift(s, q.bare, f, SigmaE::of(sig));
        CHECK((got - G).norm() <= 1e-13 * G.norm());

        // G = -iB - K/2 and B Hermitian
        auto be = std::vector<Mat>{q.bare_eig[0], q.bare_eig[1]};
        Mat B = coherent_eigen(s, be, f, SigmaE::of(sig));
        Mat K = anticommutator_eigen(s, be, f, SigmaE::of(sig));
        CHECK((B - B.adjoint()).norm() <= 1e-12 * std::max(1.0, B.norm()));
        CHECK((drift_eigen(s, be, f, SigmaE::of(sig)) - (cplx(0, -1) * B - 0.5 * K)).norm() <= 1e-12 * K.norm());
    }
    auto zero = custom_filter(1.0, [](double) { return cplx(0.0); });
    CHECK(drift(s, q.bare, zero, SigmaE::inf()).norm() == 0.0);
}

TEST_CASE("coherent term against the tanh-kernel time integral") {
    // number-preserving h(N) gives B = 0 identically; the displaced model has a genuine coherent part
    auto q = quadratic(6);
    CHECK(make_lindbladian(q.spec, q.bare_eig, metropolis(1.0), SigmaE::of(1.0)).coherent.norm() < 1e-14);

    ModelSpec m;
    m.name = "mf_bh";
    m.U = 0.6;
    m.psi = cplx(0.4, 0.0);
    q = build_model(m, 6);
    const SpectralData& s = *q.spec;
    auto f = metropolis(1.0);
    auto lind = make_lindbladian(q.spec, q.bare_eig, f, SigmaE::of(1.0));
    auto w = window(4.0 * s.norm());
    // weighted transform mu -> t_kappa(mu) exp(-mu^2/8)
    auto ks = inverse_transform([&](double mu) { return tanh_kernel_hat(1.0, w, mu) * std::exp(-mu * mu / 8.0); },
                                30.0, 40.0, 1 << 13);
    Mat K = Mat::Zero(7, 7);
    for (const Mat& L : lind.jumps) K += L.adjoint() * L;
    Mat Bq = integral_jump(s, K, ks, 1e-6).matrix;
    CHECK((Bq - lind.coherent).norm() <= 1e-6 * std::max(1.0, lind.coherent.norm()));
    CHECK(lind.coherent.norm() > 1e-3);
}

TEST_CASE("integral representations") {
    SUBCASE("jump via a Gaussian filter kernel") {
        auto b = linear(1.0, 10);
        auto f = gaussian(1.0, 1.0);
        auto k = time_domain(f, 40.0, 1 << 12);
        Mat want = filtered_jump_eigen(*b.spec, b.bare_eig[0], f);
        auto r = integral_jump(*b.spec, b.bare_eig[0], k);
        CHECK((r.matrix - want).norm() <= 1e-6 * want.norm());
        CHECK(r.error_estimate < 1e-6);
        CHECK_THROWS_AS(integral_jump(*b.spec, b.bare_eig[0], time_domain(f, 1.0, 256)), PreconditionError);
    }
    SUBCASE("wide Gaussian keeps the diagonal Bohr component at fhat(0)") {
        auto q = quadratic(6);
        auto f = gaussian(1e-3, 50.0);
        Mat N = number_op(q.space).matrix;
        auto k = time_domain(f, 2.0, 1 << 12);
        auto r = integral_jump(*q.spec, q.spec->to_eigen(N), k, 1e-3);
        CHECK((r.matrix - f(0.0) * q.spec->to_eigen(N)).norm() <= 1e-6 * N.norm() + r.error_estimate);
    }
    SUBCASE("drift via the g kernel") {
        auto q = quadratic(8);
        auto f = metropolis(1.0);
        auto lind = make_lindbladian(q.spec, q.bare_eig, f, SigmaE::of(1.0));
        auto g = g_kernel(1.0, 1.0, 30.0, 1 << 12);
        auto r = integral_drift(*q.spec, lind.jumps, g);
        CHECK((r.matrix - lind.drift).norm() <= 1e-6 * lind.drift.norm());
    }
}

TEST_CASE("adjoint-closed bare jumps are required") {
    auto q = quadratic(5);
    std::vector<TruncatedOperator> only_a{q.bare[0]};
    CHECK_THROWS_WITH_AS(assemble(q.spec, only_a, metropolis(1.0), SigmaE::inf()),
                         doctest::Contains("KMS structure requires adjoint-closed bare jumps"), PreconditionError);
}

TEST_CASE("property: trace preservation and Gibbs invariance") {
    for (const char* name : {"linear", "quadratic", "mf_bh"}) {
        ModelSpec m;
        m.name = name;
        m.gamma = 1.1;
        m.U = 0.6;
        m.psi = cplx(0.3, 0.1);
        auto b = build_model(m, 7);
        const int D = b.spec->dim();
        for (double sig : {0.0, 0.5, 1.0, 4.0, inf}) {
            for (auto f : {metropolis(1.0), gaussian(0.7, 1.5), metropolis_regularized(2.0, 0.05, 0.3)}) {
                auto [lind, S] = assemble(b.spec, b.bare, f, SigmaE::of(sig));
                CHECK(trace_preservation_residual(S) <= 1e-11);
                auto g = gibbs(*b.spec, f.beta);
                CHECK(gibbs_residual(S, g, *b.spec) <= 1e-10 * one_to_one_estimate(S));
                for (int r = 0; r < 3; ++r) {
                    Mat rho = gen::density(D);
                    Mat out = glab::apply(lind, rho);
                    CHECK(std::abs(out.trace()) <= 1e-11 * trace_norm(out) * D + 1e-15);
                    CHECK((out - unvec(S.matrix * vec(rho), D)).norm() <= 1e-12 * std::max(1.0, out.norm()));
                }
            }
        }
    }
}

TEST_CASE("property: CP coefficient block is positive semidefinite") {
    auto q = quadratic(6);
    const auto& bohr = q.spec->bohr;
    const int nb = static_cast<int>(bohr.size());
    for (int r = 0; r < 10; ++r) {
        const double beta = gen::uniform(0.1, 3.0), sig = gen::uniform(0.1, 5.0);
        auto f = gen::integer(0, 1) ? metropolis(beta) : gaussian(beta, gen::uniform(0.5, 3.0));
        Mat C(nb, nb);
        for (int i = 0; i < nb; ++i)
            for (int j = 0; j < nb; ++j) {
                double d = bohr[i].nu - bohr[j].nu;
                C(i, j) = std::exp(-d * d / (8 * sig * sig)) * std::conj(f(bohr[i].nu)) * f(bohr[j].nu);
            }
        auto ev = Eigen::SelfAdjointEigenSolver<Mat>(C).eigenvalues();
        CHECK(ev.minCoeff() >= -1e-12 * ev.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("Davies interpolation") {
    auto q = quadratic(6);
    auto f = metropolis(1.0);
    Mat S0 = superop_of(make_lindbladian(q.spec, q.bare_eig, f, SigmaE::zero()));
    const double dmin = 2.0; // closest distinct Bohr frequencies of a on N^2
    std::vector<double> diffs;
    for (double k : {2.0, 4.0, 8.0}) {
        double sig = dmin / k;
        diffs.push_back((superop_of(make_lindbladian(q.spec, q.bare_eig, f, SigmaE::of(sig))) - S0).norm());
    }
    CHECK(diffs[0] > diffs[1]);
    CHECK(diffs[1] > diffs[2]);
    // leading term scales like exp(-dmin^2 / 8 sigma^2)
    CHECK(diffs[2] / diffs[1] == doctest::Approx(std::exp(-6.0)).epsilon(0.05));
    CHECK(diffs[2] <= std::exp(-8.0) * diffs[0] / std::exp(-0.5));
}

TEST_CASE("time-conjugated generators") {
    auto q = quadratic(5);
    auto f = metropolis(1.0);
    auto lind = make_lindbladian(q.spec, q.bare_eig, f, SigmaE::inf());
    auto w = window(4.0 * q.spec->norm());
    Mat S0 = gkls_at_time(lind, 0.0, w).matrix;
    CHECK((S0 - superop_of(lind)).norm() <= 1e-12 * S0.norm());
    const int D = q.spec->dim();
    for (double t : {0.3, -1.7, 5.0}) {
        Mat U = Mat::Zero(D * D, D * D), Uinv = Mat::Zero(D * D, D * D);
        for (int j = 0; j < D; ++j)
            for (int i = 0; i < D; ++i) {
                double ph = t * (q.spec->energies(i) - q.spec->energies(j));
                U(vidx(i, j, D), vidx(i, j, D)) = std::polar(1.0, ph);
                Uinv(vidx(i, j, D), vidx(i, j, D)) = std::polar(1.0, -ph);
            }
        Mat St = gkls_at_time(lind, t, w).matrix;
        CHECK((St - U * S0 * Uinv).norm() <= 1e-11 * S0.norm());
    }
    CHECK_THROWS_AS(gkls_at_time(lind, 0.0, window(q.spec->norm())), PreconditionError);
}
