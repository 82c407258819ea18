#ifndef TQ_POLY_HPP
#define TQ_POLY_HPP

#include <vector>

#include "tq/types.hpp"

namespace tq {

/// Dense univariate polynomial with complex coefficients in ascending degree
/// order: coeffs[k] multiplies u^k.  The zero polynomial is the empty list;
/// otherwise the trailing coefficient is kept nonzero by trim().
struct CPoly {
    std::vector<Complex> coeffs;

    CPoly() = default;
    explicit CPoly(std::vector<Complex> c) : coeffs(std::move(c)) { trim(); }
    static CPoly constant(Complex c) { return CPoly({c}); }
    static CPoly monomial(Complex c, int k);

    bool is_zero() const { return coeffs.empty(); }
    int degree() const { return static_cast<int>(coeffs.size()) - 1; }
    double coeff_scale() const;  // max coefficient magnitude

    void trim();
};

Complex poly_eval(const CPoly& p, Complex u);
CPoly poly_add(const CPoly& a, const CPoly& b);
CPoly poly_scale(const CPoly& a, Complex c);
CPoly poly_mul(const CPoly& a, const CPoly& b);
CPoly poly_derivative(const CPoly& p);

/// prod_i (u - roots[i]) times an overall scale.
CPoly poly_from_roots(const std::vector<Complex>& roots, Complex scale = 1.0);

/// Deflate p by (u - r).  Returns the quotient; *remainder gets p(r).
CPoly poly_deflate(const CPoly& p, Complex r, Complex* remainder);

/// All roots via the companion matrix plus one Newton polish per root.
/// Throws std::invalid_argument("degenerate input") on zero or constant input.
std::vector<Complex> poly_roots(const CPoly& p);

/// Relative coefficient distance, scaled by the larger coefficient magnitude.
double poly_distance(const CPoly& a, const CPoly& b);

}  // namespace tq

#endif
