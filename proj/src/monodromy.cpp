#include "tq/monodromy.hpp"

#include <array>

namespace tq {

MonodromyBundle monodromy(const ModelSpec& spec, const TensorSpace& space) {
    const Index d = space.dim;
    const CMatrix id = CMatrix::Identity(d, d);

    std::array<std::array<OpPoly, 2>, 2> acc;
    acc[0][0] = OpPoly::constant(id);
    acc[0][1] = OpPoly::zero(d);
    acc[1][0] = OpPoly::zero(d);
    acc[1][1] = OpPoly::constant(id);

    for (int m = 0; m < spec.n; ++m) {
        const Complex zm = spec.z[static_cast<std::size_t>(m)];
        std::array<std::array<OpPoly, 2>, 2> loc;
        if (spec.variant == Variant::Additive) {
            const CMatrix& h = space.h_ops[static_cast<std::size_t>(m)];
            loc[0][0] = OpPoly({h - zm * id, id}, d);
            loc[0][1] = OpPoly::constant(space.f_ops[static_cast<std::size_t>(m)]);
            loc[1][0] = OpPoly::constant(space.e_ops[static_cast<std::size_t>(m)]);
            loc[1][1] = OpPoly({-h - zm * id, id}, d);
        } else {
            const Complex qfac = spec.q - 1.0 / spec.q;
            const CMatrix& qh = space.qh_ops[static_cast<std::size_t>(m)];
            const CMatrix& qhi = space.qh_inv_ops[static_cast<std::size_t>(m)];
            loc[0][0] = OpPoly({-zm * qhi, qh}, d);
            loc[0][1] = OpPoly({CMatrix::Zero(d, d), qfac * space.f_ops[static_cast<std::size_t>(m)]}, d);
            loc[1][0] = OpPoly::constant(zm * qfac * space.e_ops[static_cast<std::size_t>(m)]);
            loc[1][1] = OpPoly({-zm * qh, qhi}, d);
        }
        std::array<std::array<OpPoly, 2>, 2> next;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                next[i][j] =
                    oppoly_add(oppoly_mul(acc[i][0], loc[0][j]), oppoly_mul(acc[i][1], loc[1][j]));
        acc = std::move(next);
    }

    MonodromyBundle b;
    b.A = std::move(acc[0][0]);
    b.B = std::move(acc[0][1]);
    b.C = std::move(acc[1][0]);
    b.D = std::move(acc[1][1]);
    b.transfer = transfer_at(b, spec.kappa);
    return b;
}

OpPoly transfer_at(const MonodromyBundle& bundle, Complex kappa) {
    return oppoly_axpy(bundle.A, kappa, bundle.D);
}

}  // namespace tq
