#ifndef TQ_SOV_HPP
#define TQ_SOV_HPP

#include <vector>

#include "tq/baxter.hpp"
#include "tq/linalg.hpp"
#include "tq/oppoly.hpp"

namespace tq {

/// The transfer family on the separated function space F1 (x) ... (x) Fn,
/// indexed by lattice multi-points (factor-major, row-major flattening).
struct SovFamily {
    std::vector<int> dims;          // per-factor lattice sizes
    Index dim = 0;                  // product
    std::vector<CMatrix> yplus;     // shift-down-with-prefactor, one per factor
    std::vector<CMatrix> yminus;    // shift-up-with-prefactor
    std::vector<CMatrix> coeffs;    // n+1 coefficient operators of T(u)
    Complex coupling{0.0};          // kappa (additive) or theta (multiplicative)

    OpPoly transfer() const { return OpPoly(coeffs, dim); }
    Index flat(const std::vector<int>& idx) const;
    std::vector<int> idx_of(Index flat) const;
};

SovFamily sov_operators(const ModelSpec& spec, const SeparationLattice& lattice,
                        Complex coupling);

/// Distinct joint eigenvalues of the transfer family as TauQ pairs: tau from
/// the coefficient-operator eigenvalues, Q from the rank-1 tensor structure
/// of the common eigenvector.  Handles the degenerate (defective) family
/// arising at kappa = 1 by clustering.
std::vector<TauQPair> sov_spectrum(const ModelSpec& spec, const SeparationLattice& lattice,
                                   const SovFamily& family, Rng& rng);

struct SovSl2 {
    CMatrix e, f, h;
};

/// The auxiliary sl2 triple on the function space (additive, kappa = 1 sector).
SovSl2 sl2_on_F(const ModelSpec& spec, const SeparationLattice& lattice);

/// The raising family C(u) (degree n-1); with the kappa = 1 transfer it
/// generates a commutative algebra commuting with the sl2 action.
OpPoly raising_C(const ModelSpec& spec, const SeparationLattice& lattice);

/// Number of distinct eigenvalue polynomials of the transfer family.
int count_local_solutions(const ModelSpec& spec, Complex coupling, Rng& rng);

}  // namespace tq

#endif
