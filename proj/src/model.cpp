#include "tq/model.hpp"

#include <algorithm>
#include <cmath>

namespace tq {

Weight Weight::integral_additive(int two_lambda) {
    if (two_lambda < 0) throw std::invalid_argument("integral weight must be nonnegative");
    Weight w;
    w.integral = true;
    w.steps = two_lambda;
    w.lambda = 0.5 * double(two_lambda);
    return w;
}

Weight Weight::generic_additive(Complex lambda, int truncation) {
    if (truncation < 1) throw std::invalid_argument("truncation must be positive");
    Weight w;
    w.integral = false;
    w.lambda = lambda;
    w.truncation = truncation;
    return w;
}

Weight Weight::integral_multiplicative(int d) {
    if (d < 0) throw std::invalid_argument("integral weight must be nonnegative");
    Weight w;
    w.integral = true;
    w.steps = d;
    return w;
}

Weight Weight::generic_multiplicative(Complex q_two_lambda, int truncation) {
    if (truncation < 1) throw std::invalid_argument("truncation must be positive");
    Weight w;
    w.integral = false;
    w.q_two_lambda = q_two_lambda;
    w.truncation = truncation;
    return w;
}

Complex ModelSpec::q_two_lambda(int m) const {
    const Weight& w = weights[static_cast<std::size_t>(m)];
    if (variant == Variant::Additive) throw std::logic_error("q_two_lambda: additive spec");
    if (!w.integral) return w.q_two_lambda;
    Complex p(1.0);
    for (int k = 0; k < w.steps; ++k) p *= q;
    return p;
}

Complex ModelSpec::q_lambda(int m) const {
    const Weight& w = weights[static_cast<std::size_t>(m)];
    if (variant == Variant::Additive) throw std::logic_error("q_lambda: additive spec");
    if (!w.integral) return std::sqrt(w.q_two_lambda);
    Complex p(1.0);
    for (int k = 0; k < w.steps / 2; ++k) p *= q;
    if (w.steps % 2 == 1) p *= std::sqrt(q);
    return p;
}

double ModelSpec::scale() const {
    double s = 1.0;
    for (const auto& zm : z) s = std::max(s, std::abs(zm));
    for (int m = 0; m < n; ++m) {
        if (variant == Variant::Additive)
            s = std::max(s, std::abs(weights[static_cast<std::size_t>(m)].lambda));
        else
            s = std::max(s, std::abs(q_two_lambda(m)));
    }
    return s;
}

std::vector<Complex> ModelSpec::factor_points(int m) const {
    const Weight& w = weights[static_cast<std::size_t>(m)];
    std::vector<Complex> pts;
    if (variant == Variant::Additive) {
        if (w.integral) {
            for (int s = 0; s <= w.steps; ++s)
                pts.push_back(z[static_cast<std::size_t>(m)] - w.lambda + double(s));
        } else {
            pts.push_back(z[static_cast<std::size_t>(m)] - w.lambda);
            pts.push_back(z[static_cast<std::size_t>(m)] + w.lambda);
        }
    } else {
        const Complex ql2 = q_two_lambda(m);
        const int top = w.integral ? w.steps : w.truncation - 1;
        Complex point = z[static_cast<std::size_t>(m)] / ql2;
        const Complex ratio = q * q;
        for (int s = 0; s <= top; ++s) {
            pts.push_back(point);
            point *= ratio;
        }
        if (!w.integral) pts.push_back(z[static_cast<std::size_t>(m)] * ql2);
    }
    return pts;
}

bool ModelSpec::well_separated(double* min_gap) const {
    std::vector<Complex> all;
    for (int m = 0; m < n; ++m) {
        const auto pts = factor_points(m);
        all.insert(all.end(), pts.begin(), pts.end());
    }
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < all.size(); ++i)
        for (std::size_t j = i + 1; j < all.size(); ++j)
            gap = std::min(gap, std::abs(all[i] - all[j]));
    if (min_gap) *min_gap = gap;
    return gap > tol.margin_tol * scale();
}

int ModelSpec::total_steps() const {
    int s = 0;
    for (const auto& w : weights) s += w.dim() - 1;
    return s;
}

void ModelSpec::validate() const {
    tol.validate();
    if (n < 1) throw std::invalid_argument("n must be positive");
    if (static_cast<int>(weights.size()) != n || static_cast<int>(z.size()) != n)
        throw std::invalid_argument("weights/z length must equal n");
    for (const auto& w : weights)
        if (w.dim() < 1) throw std::invalid_argument("nonpositive module dimension");
    if (variant == Variant::Multiplicative) {
        for (const auto& zm : z)
            if (std::abs(zm) == 0.0)
                throw std::invalid_argument("multiplicative inhomogeneities must be nonzero");
        // q must stay away from roots of unity up to the largest order seen
        // by the lattices and the q-integers of the module actions.
        int order = 2;
        for (const auto& w : weights) order = std::max(order, 2 * w.dim() + 2);
        Complex p(1.0);
        for (int k = 1; k <= order; ++k) {
            p *= q;
            if (std::abs(p - 1.0) <= tol.margin_tol)
                throw std::invalid_argument("q too close to a root of unity");
        }
    }
}

}  // namespace tq
