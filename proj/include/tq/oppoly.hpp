#ifndef TQ_OPPOLY_HPP
#define TQ_OPPOLY_HPP

#include <vector>

#include "tq/poly.hpp"
#include "tq/types.hpp"

namespace tq {

/// Polynomial in u whose coefficients are dense operators of one shared
/// square shape.  coeffs[k] multiplies u^k.
struct OpPoly {
    std::vector<CMatrix> coeffs;
    Index dim = 0;

    OpPoly() = default;
    OpPoly(std::vector<CMatrix> c, Index d) : coeffs(std::move(c)), dim(d) {}

    static OpPoly zero(Index dim) { return OpPoly({CMatrix::Zero(dim, dim)}, dim); }
    static OpPoly constant(const CMatrix& m) { return OpPoly({m}, m.rows()); }
    /// p(u) * id, lifted from a scalar polynomial.
    static OpPoly scalar(const CPoly& p, Index dim);

    int degree() const { return static_cast<int>(coeffs.size()) - 1; }
    CMatrix eval(Complex u) const;
};

CVector oppoly_apply(const OpPoly& P, Complex u, const CVector& v);
OpPoly oppoly_add(const OpPoly& a, const OpPoly& b);
OpPoly oppoly_scale(const OpPoly& a, Complex c);
OpPoly oppoly_axpy(const OpPoly& a, Complex c, const OpPoly& b);  // a + c*b
OpPoly oppoly_mul(const OpPoly& a, const OpPoly& b);

}  // namespace tq

#endif
