#ifndef TQ_MODEL_HPP
#define TQ_MODEL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "tq/types.hpp"

namespace tq {

enum class Variant { Additive, Multiplicative };

/// One highest-weight factor.  Additive variant: weight Lambda, integral
/// when 2*Lambda is a nonnegative integer.  Multiplicative variant: the
/// weight enters through q^{2 Lambda}; integral when q^{4 Lambda} = q^{2 d}.
/// Non-integral weights carry an explicit truncation depth (module dimension).
struct Weight {
    bool integral = true;
    int steps = 0;               // additive: 2*Lambda;  multiplicative: d
    Complex lambda{0.0};         // additive Lambda
    Complex q_two_lambda{1.0};   // multiplicative q^{2 Lambda}
    int truncation = 0;

    static Weight integral_additive(int two_lambda);
    static Weight generic_additive(Complex lambda, int truncation);
    static Weight integral_multiplicative(int d);
    static Weight generic_multiplicative(Complex q_two_lambda, int truncation);

    int dim() const { return integral ? steps + 1 : truncation; }
};

struct ModelSpec {
    Variant variant = Variant::Additive;
    int n = 1;
    std::vector<Weight> weights;
    std::vector<Complex> z;
    Complex kappa{0.0};
    Complex theta{0.0};  // multiplicative Baxter coupling, kappa = q^{2l} theta
    Complex q{1.0};
    ToleranceProfile tol;
    std::uint64_t rng_seed = 1;

    /// Common nondimensionalization for all relative tolerances.
    double scale() const;

    /// Pairwise separation of the singular-point lattices; returns the
    /// minimal gap through *min_gap when requested.
    bool well_separated(double* min_gap = nullptr) const;

    /// Lattice points of factor m (additive: z-L, z-L+1, ..., z+L;
    /// multiplicative: geometric with ratio q^2), used by the separation
    /// checks and the difference-equation side.
    std::vector<Complex> factor_points(int m) const;

    /// q^{Lambda_m} with the principal branch when a square root is needed.
    Complex q_lambda(int m) const;
    Complex q_two_lambda(int m) const;

    int total_steps() const;  // sum of (dim_m - 1)

    void validate() const;
};

}  // namespace tq

#endif
