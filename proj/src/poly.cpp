#include "tq/poly.hpp"

#include <algorithm>
#include <cmath>

namespace tq {

CPoly CPoly::monomial(Complex c, int k) {
    std::vector<Complex> v(static_cast<std::size_t>(k) + 1, Complex(0.0));
    v.back() = c;
    return CPoly(std::move(v));
}

void CPoly::trim() {
    while (!coeffs.empty() && std::abs(coeffs.back()) == 0.0) coeffs.pop_back();
}

double CPoly::coeff_scale() const {
    double s = 0.0;
    for (const auto& c : coeffs) s = std::max(s, std::abs(c));
    return s;
}

Complex poly_eval(const CPoly& p, Complex u) {
    Complex acc(0.0);
    for (auto it = p.coeffs.rbegin(); it != p.coeffs.rend(); ++it) acc = acc * u + *it;
    return acc;
}

CPoly poly_add(const CPoly& a, const CPoly& b) {
    std::vector<Complex> c(std::max(a.coeffs.size(), b.coeffs.size()), Complex(0.0));
    for (std::size_t k = 0; k < a.coeffs.size(); ++k) c[k] += a.coeffs[k];
    for (std::size_t k = 0; k < b.coeffs.size(); ++k) c[k] += b.coeffs[k];
    return CPoly(std::move(c));
}

CPoly poly_scale(const CPoly& a, Complex s) {
    std::vector<Complex> c = a.coeffs;
    for (auto& x : c) x *= s;
    return CPoly(std::move(c));
}

CPoly poly_mul(const CPoly& a, const CPoly& b) {
    if (a.is_zero() || b.is_zero()) return CPoly();
    std::vector<Complex> c(a.coeffs.size() + b.coeffs.size() - 1, Complex(0.0));
    for (std::size_t i = 0; i < a.coeffs.size(); ++i)
        for (std::size_t j = 0; j < b.coeffs.size(); ++j) c[i + j] += a.coeffs[i] * b.coeffs[j];
    return CPoly(std::move(c));
}

CPoly poly_derivative(const CPoly& p) {
    if (p.degree() < 1) return CPoly();
    std::vector<Complex> c(p.coeffs.size() - 1);
    for (std::size_t k = 1; k < p.coeffs.size(); ++k) c[k - 1] = double(k) * p.coeffs[k];
    return CPoly(std::move(c));
}

CPoly poly_from_roots(const std::vector<Complex>& roots, Complex scale) {
    CPoly p = CPoly::constant(scale);
    for (const auto& r : roots) p = poly_mul(p, CPoly({-r, Complex(1.0)}));
    return p;
}

CPoly poly_deflate(const CPoly& p, Complex r, Complex* remainder) {
    if (p.is_zero()) {
        if (remainder) *remainder = 0.0;
        return CPoly();
    }
    const int d = p.degree();
    std::vector<Complex> q(static_cast<std::size_t>(std::max(d, 0)));
    Complex acc = p.coeffs.back();
    for (int k = d - 1; k >= 0; --k) {
        q[static_cast<std::size_t>(k)] = acc;
        acc = acc * r + p.coeffs[static_cast<std::size_t>(k)];
    }
    if (remainder) *remainder = acc;
    return CPoly(std::move(q));
}

std::vector<Complex> poly_roots(const CPoly& p) {
    if (p.degree() < 1) throw std::invalid_argument("degenerate input");
    const int d = p.degree();
    const Complex lead = p.coeffs.back();

    CMatrix comp = CMatrix::Zero(d, d);
    for (int i = 1; i < d; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < d; ++i) comp(i, d - 1) = -p.coeffs[static_cast<std::size_t>(i)] / lead;

    Eigen::ComplexEigenSolver<CMatrix> es(comp, /*computeEigenvectors=*/false);
    std::vector<Complex> roots(static_cast<std::size_t>(d));
    const CPoly dp = poly_derivative(p);
    for (int i = 0; i < d; ++i) {
        Complex r = es.eigenvalues()(i);
        const Complex fr = poly_eval(p, r);
        const Complex dfr = poly_eval(dp, r);
        if (std::abs(dfr) > 1e-300) r -= fr / dfr;  // one Newton polish
        roots[static_cast<std::size_t>(i)] = r;
    }
    std::sort(roots.begin(), roots.end(), [](Complex a, Complex b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    return roots;
}

double poly_distance(const CPoly& a, const CPoly& b) {
    const std::size_t n = std::max(a.coeffs.size(), b.coeffs.size());
    double num = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const Complex ca = k < a.coeffs.size() ? a.coeffs[k] : Complex(0.0);
        const Complex cb = k < b.coeffs.size() ? b.coeffs[k] : Complex(0.0);
        num = std::max(num, std::abs(ca - cb));
    }
    const double den = std::max({a.coeff_scale(), b.coeff_scale(), 1e-300});
    return num / den;
}

}  // namespace tq
