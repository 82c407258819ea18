#ifndef TQ_BETHE_HPP
#define TQ_BETHE_HPP

#include <optional>
#include <utility>
#include <vector>

#include "tq/model.hpp"
#include "tq/poly.hpp"
#include "tq/types.hpp"

namespace tq {

enum class PathStatus { Converged, Escaped, Collided, MaxSteps };

const char* to_string(PathStatus s);

struct PathHistory {
    int steps = 0;
    int newton_iterations = 0;
    double final_s = 0.0;
};

struct SeedIndex {
    std::vector<int> nu;  // composition of ell over the n factors
    bool in_Zlo = true;   // nu_m <= dim_m - 1 for every factor
};

struct BetheSolution {
    std::vector<Complex> t;
    Complex kappa{0.0};
    int ell = 0;
    double residual = 0.0;
    double jacobian_condition = 1.0;
    bool offdiagonal = false;
    bool admissible = false;
    int string_detected = -1;  // 0-based factor index, -1 when absent
    std::vector<Complex> orbit_key;
    SeedIndex seed;
    PathStatus path_status = PathStatus::Converged;
    PathHistory history;
};

/// Left-hand minus kappa times right-hand side of the Bethe system,
/// one component per coordinate.
CVector bae_residual(const ModelSpec& spec, const std::vector<Complex>& t, Complex kappa);

/// Max residual component normalized by the product magnitudes.
double bae_relative_residual(const ModelSpec& spec, const std::vector<Complex>& t, Complex kappa);

/// Analytic Jacobian of bae_residual.
CMatrix bae_jacobian(const ModelSpec& spec, const std::vector<Complex>& t, Complex kappa);

/// All kappa=0 seeds at level ell: one string configuration per composition
/// nu, coordinates forming arithmetic (resp. q^2-geometric) strings.
std::vector<std::pair<SeedIndex, std::vector<Complex>>> seeds_kappa0(const ModelSpec& spec,
                                                                     int ell);

struct TrackOptions {
    double start_modulus = 1e-3;  // |kappa| at the first corrected point
    double initial_step = 0.05;
    double max_step = 0.1;
    double step_floor = 1e-8;
    int max_newton = 6;
    double escape_factor = 1e8;
};

/// Predictor-corrector continuation along kappa(s) = s * kappa_target from
/// the kappa=0 seed.  Failures are reported through path_status, never thrown.
BetheSolution track_path(const ModelSpec& spec, const SeedIndex& seed,
                         const std::vector<Complex>& t0, Complex kappa_target,
                         const TrackOptions& opts = {});

/// Fill offdiagonal/admissible/string flags and the canonical orbit key.
void classify(const ModelSpec& spec, BetheSolution& sol);

struct Orbit {
    BetheSolution representative;
    int multiplicity = 1;
    std::vector<std::size_t> members;  // indices into the input list
};

/// Group solutions into S_ell orbits by their sorted coordinate tuples.
std::vector<Orbit> orbit_dedup(const ModelSpec& spec, const std::vector<BetheSolution>& sols);

/// Eigenvalue polynomial tau(u, t); throws "nonvanishing residue" when t is
/// not a Bethe solution at the given kappa.
CPoly eigenvalue_tau(const ModelSpec& spec, const std::vector<Complex>& t, Complex kappa);

/// Canonically sorted copy of a coordinate tuple (by real, then imaginary part).
std::vector<Complex> sorted_tuple(const std::vector<Complex>& t);

}  // namespace tq

#endif
