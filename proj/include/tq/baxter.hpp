#ifndef TQ_BAXTER_HPP
#define TQ_BAXTER_HPP

#include <optional>
#include <vector>

#include "tq/bethe.hpp"
#include "tq/model.hpp"
#include "tq/poly.hpp"

namespace tq {

/// The singular-point lattices S_m and their union, factor-major order.
struct SeparationLattice {
    std::vector<std::vector<Complex>> sets;
    std::vector<Complex> points;  // concatenation of the sets
    std::vector<int> owner;       // factor index per union point
    std::vector<int> offsets;     // first union index of each factor
    bool disjoint = true;
    double min_gap = 0.0;
};

struct QProfile {
    std::vector<Complex> values;  // one per union point
    std::optional<CPoly> poly;    // present when Q extends to a polynomial
};

enum class TauQSource { Bethe, SoVSpectrum, LocalLinear };

struct TauQPair {
    CPoly tau;
    QProfile q_profile;
    TauQSource source = TauQSource::Bethe;
    int deg_q = 0;
    int multiplicity = 1;          // joint-eigenvalue multiplicity (SoV source)
    double factor_residual = 0.0;  // rank-1 factorization defect (SoV source)
};

/// Integral weights only; disjointness is checked and flagged, not fatal.
SeparationLattice build_lattice(const ModelSpec& spec);

/// Max pointwise defect of the difference equation over the union lattice,
/// relative to the local term magnitudes.  `coupling` is kappa (additive)
/// or theta (multiplicative).
double baxter_residual(const ModelSpec& spec, const SeparationLattice& lattice,
                       const TauQPair& pair, Complex coupling);

/// Per-factor tridiagonal restriction of the difference equation; returns the
/// assembled kernel profile when every block is singular, none otherwise.
std::optional<QProfile> local_solve_linear(const ModelSpec& spec,
                                           const SeparationLattice& lattice, const CPoly& tau,
                                           Complex coupling);

/// tau(u, t) paired with Q(u) = prod_a (u - t_a); multiplicative variant uses
/// the kappa = q^{2 l} theta coupling and rescales tau accordingly.
TauQPair global_from_bethe(const ModelSpec& spec, const SeparationLattice& lattice,
                           const std::vector<Complex>& t, Complex coupling);

/// Per-factor gauge: first value of magnitude above margin_tol scaled to 1.
void gauge_fix(QProfile& profile, const SeparationLattice& lattice, double margin);

/// Max relative deviation between two profiles after aligning the per-factor
/// gauge constants.
double profile_mismatch(const QProfile& a, const QProfile& b, const SeparationLattice& lattice);

}  // namespace tq

#endif
