#ifndef TQ_LINALG_HPP
#define TQ_LINALG_HPP

#include <utility>
#include <vector>

#include "tq/types.hpp"

namespace tq {

struct RankResult {
    int rank = 0;
    double condition = 0.0;  // largest/smallest retained singular value; 0 for rank 0
};

/// Numerical rank from the singular spectrum: count of values above
/// rank_tol times the largest.
RankResult matrix_rank(const CMatrix& m, const ToleranceProfile& tol);

/// Relative commutator defect ||AB-BA|| / (||A|| ||B||), Frobenius norms.
double commutator_defect(const CMatrix& a, const CMatrix& b);

struct CommutingDiag {
    CMatrix eigenvectors;                  // columns are the common eigenvectors
    std::vector<CVector> eigenvalues;      // one list per family member, aligned by column
};

/// Simultaneous diagonalization of a pairwise-commuting family by
/// diagonalizing a random real linear combination.  Redraws the combination
/// (at most 8 times) when eigenvalue clusters collide within dedup_tol.
/// Throws std::invalid_argument("not a commuting family") or
/// std::runtime_error("degenerate spectrum").
CommutingDiag commuting_diag(const std::vector<CMatrix>& family, const ToleranceProfile& tol,
                             Rng& rng);

struct JointCluster {
    int multiplicity = 1;
    CVector op_eigenvalues;   // one joint eigenvalue per family member
    CVector eigenvector;      // a common eigenvector (unit norm)
    double eigenvector_residual = 0.0;  // max_j ||(M_j - lam_j) v|| / ||M_j||
};

/// Joint spectrum of a commuting family that may be non-diagonalizable:
/// clusters the eigenvalues of a random combination, recovers each member's
/// eigenvalue on a cluster from the spectral-projector trace, and extracts
/// one common eigenvector per cluster.  Falls back gracefully where
/// commuting_diag would fail with a degenerate spectrum.
std::vector<JointCluster> joint_spectrum(const std::vector<CMatrix>& family,
                                         const ToleranceProfile& tol, Rng& rng);

struct RankOneFactorization {
    std::vector<CVector> factors;  // one per axis
    double residual = 0.0;         // relative reconstruction error
};

/// Factor a vector on a product index set (row-major over `dims`) into a
/// tensor product of per-axis vectors by sequential dominant-singular-vector
/// splitting, left to right.
RankOneFactorization rank_one_factor(const CVector& v, const std::vector<int>& dims);

}  // namespace tq

#endif
