#include "tq/oppoly.hpp"

namespace tq {

OpPoly OpPoly::scalar(const CPoly& p, Index dim) {
    std::vector<CMatrix> c;
    if (p.is_zero()) {
        c.push_back(CMatrix::Zero(dim, dim));
    } else {
        c.reserve(p.coeffs.size());
        for (const auto& x : p.coeffs) c.push_back(x * CMatrix::Identity(dim, dim));
    }
    return OpPoly(std::move(c), dim);
}

CMatrix OpPoly::eval(Complex u) const {
    CMatrix acc = CMatrix::Zero(dim, dim);
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = u * acc + *it;
    return acc;
}

CVector oppoly_apply(const OpPoly& P, Complex u, const CVector& v) {
    if (v.size() != P.dim) throw std::invalid_argument("oppoly_apply: shape mismatch");
    CVector acc = CVector::Zero(P.dim);
    for (auto it = P.coeffs.rbegin(); it != P.coeffs.rend(); ++it) acc = u * acc + (*it) * v;
    return acc;
}

OpPoly oppoly_add(const OpPoly& a, const OpPoly& b) { return oppoly_axpy(a, 1.0, b); }

OpPoly oppoly_scale(const OpPoly& a, Complex c) {
    OpPoly r = a;
    for (auto& m : r.coeffs) m *= c;
    return r;
}

OpPoly oppoly_axpy(const OpPoly& a, Complex c, const OpPoly& b) {
    if (a.dim != b.dim) throw std::invalid_argument("oppoly: shape mismatch");
    std::vector<CMatrix> out(std::max(a.coeffs.size(), b.coeffs.size()),
                             CMatrix::Zero(a.dim, a.dim));
    for (std::size_t k = 0; k < a.coeffs.size(); ++k) out[k] += a.coeffs[k];
    for (std::size_t k = 0; k < b.coeffs.size(); ++k) out[k] += c * b.coeffs[k];
    return OpPoly(std::move(out), a.dim);
}

OpPoly oppoly_mul(const OpPoly& a, const OpPoly& b) {
    if (a.dim != b.dim) throw std::invalid_argument("oppoly: shape mismatch");
    std::vector<CMatrix> out(a.coeffs.size() + b.coeffs.size() - 1, CMatrix::Zero(a.dim, a.dim));
    for (std::size_t i = 0; i < a.coeffs.size(); ++i)
        for (std::size_t j = 0; j < b.coeffs.size(); ++j) out[i + j] += a.coeffs[i] * b.coeffs[j];
    return OpPoly(std::move(out), a.dim);
}

}  // namespace tq
