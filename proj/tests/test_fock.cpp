#include "gen.hpp"

#include "glab/fock.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <set>

using namespace glab;

namespace {

std::vector<double> bohr_values(const SpectralData& s) {
    std::vector<double> v;
    for (const auto& c : s.bohr) v.push_back(c.nu);
    return v;
}

Mat expm_diag(const SpectralData& s, double t) {
    Vec ph(s.dim());
    for (int i = 0; i < s.dim(); ++i) ph(i) = std::polar(1.0, t * s.energies(i));
    return ph.asDiagonal().toDenseMatrix();
}

} // namespace

TEST_CASE("annihilation matrix elements") {
    auto a = annihilation(FockSpace(1, 2));
    Mat want = Mat::Zero(3, 3);
    want(0, 1) = 1.0;
    want(1, 2) = std::sqrt(2.0);
    CHECK((a.matrix - want).norm() < 1e-15);

    auto a2 = annihilation(FockSpace(1, 4), 0, 2);
    CHECK(a2.matrix(0, 2).real() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(a2.matrix(2, 4).real() == doctest::Approx(std::sqrt(12.0)).epsilon(1e-15));

    auto a_two_mode = annihilation(FockSpace(2, 1), 1);
    Mat a1 = annihilation(FockSpace(1, 1)).matrix;
    Mat kron = Mat::Zero(4, 4);
    for (int i = 0; i < 2; ++i) kron.block(2 * i, 2 * i, 2, 2) = a1;
    CHECK((a_two_mode.matrix - kron).norm() == 0.0);

    CHECK_THROWS_WITH_AS(annihilation(FockSpace(1, 2), 0, 3), doctest::Contains("power exceeds cutoff"),
                         PreconditionError);
}

TEST_CASE("fock space dimension") {
    FockSpace s(3, 2);
    CHECK(s.dim == 27);
    CHECK_THROWS_AS(FockSpace(0, 2), PreconditionError);
    CHECK_THROWS_AS(FockSpace(1, 0), PreconditionError);
}

TEST_CASE("creation is the adjoint of annihilation") {
    FockSpace s(1, 5);
    CHECK((creation(s).matrix - annihilation(s).matrix.adjoint()).norm() == 0.0);
    CHECK((annihilation(s).adjoint().matrix - creation(s).matrix).norm() == 0.0);
}

TEST_CASE("build_hN") {
    FockSpace s(1, 3);
    CHECK(build_hN(s, std::vector<double>{0, 1, 2, 3}).matrix.diagonal().real() == RVec::LinSpaced(4, 0, 3));
    auto sq = build_hN(s, [](int n) { return double(n) * n; });
    CHECK(sq.matrix.diagonal().real()(3) == 9.0);
    auto pert = build_hN(s, std::vector<double>{0.5, 1, 2, 3});
    CHECK(pert.matrix(0, 0).real() == 0.5);
    CHECK_THROWS_AS(build_hN(FockSpace(2, 2), std::vector<double>{0, 1, 2}), PreconditionError);
}

TEST_CASE("mean-field Hamiltonian") {
    FockSpace s1(1, 1);
    auto h = build_mf_hamiltonian(s1, {0.0, 0.0}, 1.0);
    Mat want(2, 2);
    want << 0, 1, 1, 0;
    CHECK((h.matrix - want).norm() == 0.0);

    FockSpace s(1, 30);
    std::vector<double> bh(31);
    for (int n = 0; n <= 30; ++n) bh[n] = n * (n - 1) / 2.0;
    auto hm = build_mf_hamiltonian(s, bh, 0.3);
    CHECK((hm.matrix - hm.matrix.adjoint()).norm() < 1e-14);
    CHECK((build_mf_hamiltonian(s, bh, 0.0).matrix - build_hN(s, bh).matrix).norm() == 0.0);
}

TEST_CASE("Bohr sets") {
    auto s = eigendecompose(build_hN(FockSpace(1, 2), std::vector<double>{0, 1, 2}));
    CHECK(bohr_values(s) == std::vector<double>{-2, -1, 0, 1, 2});

    auto q = eigendecompose(build_hN(FockSpace(1, 3), [](int n) { return double(n) * n; }));
    for (double nu : {1.0, 3.0, 5.0}) {
        CHECK(q.find_cluster(nu) >= 0);
        CHECK(q.find_cluster(-nu) >= 0);
    }
    CHECK(q.find_cluster(2.0) == -1);
    CHECK(q.diagonal_input);
}

TEST_CASE("eigendecompose rejects non-Hermitian input") {
    TruncatedOperator H;
    H.space = FockSpace(1, 1);
    H.matrix = Mat::Zero(2, 2);
    H.matrix(0, 1) = 1.0;
    CHECK_THROWS_AS(eigendecompose(H), PreconditionError);
}

TEST_CASE("property: random Hermitian reconstruction and cluster invariants") {
    for (int trial = 0; trial < 10; ++trial) {
        TruncatedOperator H;
        H.space = FockSpace(1, 5);
        H.matrix = gen::hermitian(6);
        auto s = eigendecompose(H);
        Mat rec = s.vectors * s.energies.cast<cplx>().asDiagonal() * s.vectors.adjoint();
        CHECK((rec - H.matrix).norm() < 1e-12 * H.matrix.norm());
        CHECK((s.vectors.adjoint() * s.vectors - Mat::Identity(6, 6)).norm() < 1e-12);
        for (int i = 1; i < 6; ++i) CHECK(s.energies(i) >= s.energies(i - 1));
        // each ordered pair in exactly one cluster, within tolerance of its representative
        std::set<std::pair<int, int>> seen;
        for (size_t c = 0; c < s.bohr.size(); ++c)
            for (auto [i, j] : s.bohr[c].pairs) {
                CHECK(seen.insert({i, j}).second);
                CHECK(std::abs(s.energies(i) - s.energies(j) - s.bohr[c].nu) <= s.bohr_tol);
                CHECK(s.cluster_of(i, j) == static_cast<int>(c));
            }
        CHECK(seen.size() == 36u);
    }
}

TEST_CASE("energy jumps for ladder operators") {
    FockSpace sp(1, 6);
    auto s = eigendecompose(build_hN(sp, [](int n) { return double(n); }));
    auto a = annihilation(sp), ad = creation(sp);
    CHECK((energy_jump(s, a, -1.0).matrix - a.matrix).norm() < 1e-14);
    CHECK(energy_jump(s, a, 1.0).matrix.norm() == 0.0);
    CHECK((energy_jump(s, ad, 1.0).matrix - ad.matrix).norm() < 1e-14);
    CHECK_THROWS_AS(energy_jump(s, a, 0.5), PreconditionError);

    FockSpace s3(1, 3);
    auto q = eigendecompose(build_hN(s3, [](int n) { return double(n) * n; }));
    Mat a3 = energy_jump(q, annihilation(s3), -3.0).matrix;
    CHECK(a3(1, 2).real() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    a3(1, 2) = 0.0;
    CHECK(a3.norm() == 0.0);
}

TEST_CASE("property: completeness, covariance and adjoint relation") {
    for (int trial = 0; trial < 6; ++trial) {
        const int M = gen::integer(3, 8);
        FockSpace sp(1, M);
        TruncatedOperator H = trial % 2 == 0 ? build_hN(sp, gen::increasing_table(M, 0.3, 2.0))
                                             : build_mf_hamiltonian(sp, gen::increasing_table(M, 0.5, 1.5),
                                                                    cplx(gen::uniform(0, 0.5), gen::uniform(0, 0.5)));
        auto s = eigendecompose(H);
        for (const auto& A : {annihilation(sp), creation(sp), annihilation(sp, 0, 2)}) {
            const Mat Ae = s.to_eigen(A.matrix);
            Mat sum = Mat::Zero(sp.dim, sp.dim);
            for (size_t c = 0; c < s.bohr.size(); ++c) {
                Mat Ac = energy_jump_eigen(s, Ae, static_cast<int>(c));
                sum += Ac;
                for (double t : {0.1, 1.0}) {
                    Mat U = expm_diag(s, t);
                    Mat lhs = U * Ac * U.adjoint();
                    CHECK((lhs - std::polar(1.0, t * s.bohr[c].nu) * Ac).norm() <= 1e-10 * std::max(1.0, Ae.norm()));
                }
                // (A_nu)^dag = (A^dag)_{-nu}
                Mat Adag_m = energy_jump_eigen(s, Ae.adjoint(), s.mirror[c]);
                CHECK((Ac.adjoint() - Adag_m).norm() == 0.0);
            }
            CHECK((sum - Ae).norm() <= 1e-12 * Ae.norm());
            CHECK((s.from_eigen(Ae) - A.matrix).norm() <= 1e-12 * A.matrix.norm());
        }
    }
}
