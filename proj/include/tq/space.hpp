#ifndef TQ_SPACE_HPP
#define TQ_SPACE_HPP

#include <vector>

#include "tq/linalg.hpp"
#include "tq/model.hpp"
#include "tq/types.hpp"

namespace tq {

/// Tensor product of highest-weight modules in the monomial basis
/// F^nu = f^{nu_1} v_1 (x) ... (x) f^{nu_n} v_n, flattened row-major so that
/// increasing flat index is lexicographic order in nu.
struct TensorSpace {
    Variant variant = Variant::Additive;
    std::vector<int> dims;
    Index dim = 0;

    // Full-space generator matrices, one per factor.
    std::vector<CMatrix> e_ops, f_ops, h_ops;
    std::vector<CMatrix> qh_ops, qh_inv_ops;  // multiplicative only
    CMatrix de, df, dh;                       // diagonal action delta(e), delta(f), delta(h)

    // weight_blocks[l] lists the flat indices of { nu : sum nu = l }, ordered.
    std::vector<std::vector<Index>> weight_blocks;

    Index flat(const std::vector<int>& nu) const;
    std::vector<int> nu_of(Index flat) const;
    int levels() const { return static_cast<int>(weight_blocks.size()); }
    Index block_dim(int ell) const {
        return static_cast<Index>(weight_blocks[static_cast<std::size_t>(ell)].size());
    }

    CVector extract_block(const CVector& full, int ell) const;
    CVector embed_block(const CVector& blockv, int ell) const;
    CVector highest_weight_vector() const;
};

/// Generator matrices in the monomial basis; generic weights are realized by
/// Verma truncation at the stated depth, which must be at least ell_max+1.
TensorSpace build_space(const ModelSpec& spec, int ell_max);

/// Matrix of delta(e): V[ell] -> V[ell-1] in the weight sub-bases.
/// ell = 0 yields an empty matrix (everything is singular at the top).
CMatrix singular_projector(const TensorSpace& space, int ell);

/// dim Sing V[ell] = dim V[ell] - rank of the projector.
int sing_dim(const TensorSpace& space, int ell, const ToleranceProfile& tol);

CMatrix kron(const CMatrix& a, const CMatrix& b);

}  // namespace tq

#endif
