#pragma once

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace glab {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

// Raised when an operation's stated precondition fails. `constraint` names it.
struct PreconditionError : std::invalid_argument {
    std::string constraint;
    PreconditionError(const std::string& what, std::string c)
        : std::invalid_argument(what), constraint(std::move(c)) {}
};

struct FockSpace {
    int modes{1};
    int cutoff{1};
    int dim{2};

    FockSpace() = default;
    FockSpace(int m, int M);
};

struct TruncatedOperator {
    FockSpace space;
    Mat matrix;
    std::string label;

    TruncatedOperator adjoint() const;
};

struct BohrCluster {
    double nu{0.0};
    std::vector<std::pair<int, int>> pairs;
};

struct SpectralData {
    RVec energies;                 // ascending
    Mat vectors;                   // columns
    std::vector<BohrCluster> bohr; // ascending in nu
    Eigen::MatrixXi cluster_of;    // (i,j) -> index into bohr
    std::vector<int> mirror;       // cluster of -nu
    double degeneracy_tol{0.0};
    double bohr_tol{0.0};
    bool ambiguous{false};         // two clusters closer than 2*bohr_tol
    bool diagonal_input{false};    // vectors is a permutation matrix
    std::vector<int> perm;         // eigen index -> Fock index when diagonal_input

    int dim() const { return static_cast<int>(energies.size()); }
    double norm() const;           // max |E|
    double h0() const { return std::max(0.0, -energies(0)); }
    double nu(int i, int j) const { return bohr[cluster_of(i, j)].nu; }
    int find_cluster(double nu) const; // -1 when absent

    Mat to_eigen(const Mat& A) const;
    Mat from_eigen(const Mat& A) const;
};

TruncatedOperator annihilation(const FockSpace& space, int mode = 0, int power = 1);
TruncatedOperator creation(const FockSpace& space, int mode = 0, int power = 1);
TruncatedOperator number_op(const FockSpace& space, int mode = 0);

// h tabulated on {0..M}
TruncatedOperator build_hN(const FockSpace& space, const std::vector<double>& h);
TruncatedOperator build_hN(const FockSpace& space, const std::function<double(int)>& h);
TruncatedOperator build_mf_hamiltonian(const FockSpace& space, const std::vector<double>& h, cplx psi);

// eps_bohr < 0 selects the default 1e-9 (1 + ||H||)
SpectralData eigendecompose(const TruncatedOperator& H, double eps_deg = 1e-12, double eps_bohr = -1.0);

TruncatedOperator energy_jump(const SpectralData& spec, const TruncatedOperator& A, double nu);
Mat energy_jump_eigen(const SpectralData& spec, const Mat& A_eig, int cluster);

} // namespace glab
