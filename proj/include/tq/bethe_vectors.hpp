#ifndef TQ_BETHE_VECTORS_HPP
#define TQ_BETHE_VECTORS_HPP

#include <vector>

#include "tq/bethe.hpp"
#include "tq/monodromy.hpp"

namespace tq {

enum class Construction { OperatorProduct, PartitionSum };

struct BetheVector {
    CVector coords;  // coordinates in the V[ell] monomial sub-basis
    std::vector<Complex> t;
    Construction construction = Construction::OperatorProduct;
    double off_block_mass = 0.0;  // weight leaked outside V[ell]; grading defect
};

/// w(t) = B(t_1) ... B(t_l) applied to the highest-weight vector.
BetheVector bethe_vector_product(const TensorSpace& space, const MonodromyBundle& bundle,
                                 const std::vector<Complex>& t);

/// The ordered-partition decomposition of w(t); independent of the monodromy
/// product.  Throws std::invalid_argument("diagonal t") on colliding
/// coordinates.
BetheVector bethe_vector_sum(const ModelSpec& spec, const TensorSpace& space,
                             const std::vector<Complex>& t);

struct EigenCheck {
    double residual = 0.0;
    double w_norm = 0.0;
    bool trivial = false;  // ||w|| below residual_tol * scale
};

/// max_u || T(u) w - tau(u) w || / (||T(u)|| ||w||) over sample_count generic u.
EigenCheck eigen_residual(const ModelSpec& spec, const TensorSpace& space,
                          const MonodromyBundle& bundle, Complex kappa,
                          const std::vector<Complex>& t, const CPoly& tau, int sample_count);

/// <v*_1 x..x v*_n, C(s_1) ... C(s_l) w(t)>.
Complex dual_pairing(const TensorSpace& space, const MonodromyBundle& bundle,
                     const std::vector<Complex>& t, const std::vector<Complex>& t_other);

/// Closed-form value of the self-pairing (prefactor times the Jacobian
/// determinant of the Bethe system).
Complex norm_determinant(const ModelSpec& spec, const std::vector<Complex>& t, Complex kappa);

/// Rank of the coordinate stack of a family of vectors in V[ell].
RankResult basis_rank(const std::vector<BetheVector>& vectors, const TensorSpace& space, int ell,
                      const ToleranceProfile& tol);

/// ||delta(e) w|| / ||w|| for a vector given in the V[ell] block.
double singular_check(const TensorSpace& space, const BetheVector& w, int ell);

struct IntertwinerFit {
    CMatrix map;                 // block-diagonal over the weight levels
    double fit_residual = 0.0;   // relative LS residual on the fitting samples
    double validation_residual = 0.0;  // out-of-sample, fresh tuples
};

/// Least-squares fit of the t-independent isomorphism V -> V^sigma carrying
/// w(t) to w^sigma(t), from generic (non-solution) sample tuples.
/// Throws std::runtime_error("rank-deficient sample set") when the samples
/// do not span.
IntertwinerFit permutation_intertwiner(const ModelSpec& spec, const std::vector<int>& sigma,
                                       int samples_per_level, Rng& rng);

ModelSpec permuted_spec(const ModelSpec& spec, const std::vector<int>& sigma);

}  // namespace tq

#endif
