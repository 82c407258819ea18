#ifndef TQ_MONODROMY_HPP
#define TQ_MONODROMY_HPP

#include "tq/oppoly.hpp"
#include "tq/space.hpp"

namespace tq {

/// Entries of the ordered 2x2 monodromy product together with the transfer
/// operator family T(u) = A(u) + kappa D(u) at the spec's kappa.
struct MonodromyBundle {
    OpPoly A, B, C, D;
    OpPoly transfer;
};

MonodromyBundle monodromy(const ModelSpec& spec, const TensorSpace& space);

/// A + kappa D with the coupling overridable per call.
OpPoly transfer_at(const MonodromyBundle& bundle, Complex kappa);

}  // namespace tq

#endif
