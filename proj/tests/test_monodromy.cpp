#include <doctest.h>

#include "tq/monodromy.hpp"

using namespace tq;

namespace {

ModelSpec additive_spec(std::vector<int> steps, std::vector<Complex> z, Complex kappa) {
    ModelSpec s;
    s.variant = Variant::Additive;
    s.n = static_cast<int>(steps.size());
    for (int st : steps) s.weights.push_back(Weight::integral_additive(st));
    s.z = std::move(z);
    s.kappa = kappa;
    return s;
}

/// Max block-leak of an operator family against the weight grading:
/// each coefficient of P must map V[l] into V[l+shift].
double grading_leak(const TensorSpace& sp, const OpPoly& p, int shift) {
    double leak = 0.0;
    for (const auto& coeff : p.coeffs) {
        for (int l = 0; l < sp.levels(); ++l) {
            const auto& cols = sp.weight_blocks[static_cast<std::size_t>(l)];
            for (Index c : cols)
                for (int lr = 0; lr < sp.levels(); ++lr) {
                    if (lr == l + shift) continue;
                    for (Index r : sp.weight_blocks[static_cast<std::size_t>(lr)])
                        leak = std::max(leak, std::abs(coeff(r, c)));
                }
        }
    }
    return leak;
}

}  // namespace

TEST_CASE("single-factor entries are the local matrices") {
    const Complex z(0.7, -0.2);
    const ModelSpec spec = additive_spec({1}, {z}, Complex(0.0));
    const TensorSpace sp = build_space(spec, 1);
    const MonodromyBundle b = monodromy(spec, sp);
    const Complex u(1.3, 0.5);
    CHECK((b.A.eval(u) - ((u - z) * CMatrix::Identity(2, 2) + sp.h_ops[0])).norm() < 1e-14);
    CHECK((b.D.eval(u) - ((u - z) * CMatrix::Identity(2, 2) - sp.h_ops[0])).norm() < 1e-14);
    CHECK((b.B.eval(u) - sp.f_ops[0]).norm() < 1e-14);
    CHECK((b.C.eval(u) - sp.e_ops[0]).norm() < 1e-14);
}

TEST_CASE("entry degrees and weight grading") {
    const ModelSpec spec =
        additive_spec({1, 2}, {Complex(0.0), Complex(3.0, 0.5)}, Complex(0.8, 0.1));
    const TensorSpace sp = build_space(spec, 3);
    const MonodromyBundle b = monodromy(spec, sp);
    CHECK(b.A.degree() == spec.n);
    CHECK(b.D.degree() == spec.n);
    // B and C have degree <= n-1: top coefficients vanish
    CHECK(b.B.coeffs.back().norm() < 1e-13);
    CHECK(b.C.coeffs.back().norm() < 1e-13);

    CHECK(grading_leak(sp, b.B, +1) < 1e-13);
    CHECK(grading_leak(sp, b.C, -1) < 1e-13);
    CHECK(grading_leak(sp, b.A, 0) < 1e-13);
    CHECK(grading_leak(sp, b.D, 0) < 1e-13);
}

TEST_CASE("oppoly coefficients reproduce the direct product evaluation") {
    const ModelSpec spec =
        additive_spec({1, 2}, {Complex(0.2, 0.4), Complex(2.6, -0.7)}, Complex(1.1, 0.6));
    const TensorSpace sp = build_space(spec, 3);
    const MonodromyBundle b = monodromy(spec, sp);
    const Complex u(0.9, -1.2);
    // direct 2x2 product of local matrices at the evaluation point
    CMatrix a1 = (u - spec.z[0]) * CMatrix::Identity(sp.dim, sp.dim) + sp.h_ops[0];
    CMatrix d1 = (u - spec.z[0]) * CMatrix::Identity(sp.dim, sp.dim) - sp.h_ops[0];
    CMatrix a2 = (u - spec.z[1]) * CMatrix::Identity(sp.dim, sp.dim) + sp.h_ops[1];
    CMatrix d2 = (u - spec.z[1]) * CMatrix::Identity(sp.dim, sp.dim) - sp.h_ops[1];
    const CMatrix bdir = a1 * sp.f_ops[1] + sp.f_ops[0] * d2;
    CHECK((b.B.eval(u) - bdir).norm() <= 1e-12 * bdir.norm());
    const CMatrix adir = a1 * a2 + sp.f_ops[0] * sp.e_ops[1];
    CHECK((b.A.eval(u) - adir).norm() <= 1e-12 * adir.norm());
    (void)d1;
}

TEST_CASE("transfer coefficients pairwise commute") {
    const ModelSpec spec =
        additive_spec({1, 1}, {Complex(0.0), Complex(3.0)}, Complex(1.7, 0.4));
    const TensorSpace sp = build_space(spec, 2);
    const MonodromyBundle b = monodromy(spec, sp);
    for (std::size_t i = 0; i < b.transfer.coeffs.size(); ++i)
        for (std::size_t j = i + 1; j < b.transfer.coeffs.size(); ++j)
            CHECK(commutator_defect(b.transfer.coeffs[i], b.transfer.coeffs[j]) < 1e-12);
}

TEST_CASE("kappa = 1 transfer commutes with the diagonal action") {
    const ModelSpec spec =
        additive_spec({1, 2}, {Complex(0.4, 0.2), Complex(3.2, -0.6)}, Complex(1.0));
    const TensorSpace sp = build_space(spec, 3);
    const MonodromyBundle b = monodromy(spec, sp);
    const OpPoly t1 = transfer_at(b, Complex(1.0));
    for (const Complex u : {Complex(0.3, 0.9), Complex(-1.4, 0.2)}) {
        const CMatrix tu = t1.eval(u);
        CHECK(commutator_defect(tu, sp.de) < 1e-12);
        CHECK(commutator_defect(tu, sp.df) < 1e-12);
        CHECK(commutator_defect(tu, sp.dh) < 1e-12);
    }
    // generic kappa does not commute with the raising action
    const OpPoly tg = transfer_at(b, Complex(2.3, 0.4));
    CHECK(commutator_defect(tg.eval(Complex(0.3, 0.9)), sp.de) > 1e-4);
}

TEST_CASE("highest-weight block action is the scalar pair product") {
    const Complex kappa(0.8, 1.4);
    const ModelSpec spec =
        additive_spec({1, 2}, {Complex(0.1, 0.3), Complex(2.8, -0.5)}, kappa);
    const TensorSpace sp = build_space(spec, 3);
    const MonodromyBundle b = monodromy(spec, sp);
    const Complex u(1.7, 0.4);
    Complex expect(1.0), expect2(1.0);
    for (int m = 0; m < spec.n; ++m) {
        expect *= u - spec.z[m] + spec.weights[m].lambda;
        expect2 *= u - spec.z[m] - spec.weights[m].lambda;
    }
    const CVector v = sp.highest_weight_vector();
    const CVector tv = oppoly_apply(b.transfer, u, v);
    CHECK(std::abs(tv(0) - (expect + kappa * expect2)) <= 1e-12 * std::abs(tv(0)));
}

TEST_CASE("multiplicative transfer commutes and acts by the q-product on top") {
    ModelSpec spec;
    spec.variant = Variant::Multiplicative;
    spec.n = 2;
    spec.q = Complex(1.21);
    spec.weights = {Weight::integral_multiplicative(1), Weight::integral_multiplicative(2)};
    spec.z = {Complex(1.0), Complex(3.7)};
    spec.kappa = Complex(0.9, 0.7);
    const TensorSpace sp = build_space(spec, 3);
    const MonodromyBundle b = monodromy(spec, sp);
    for (std::size_t i = 0; i < b.transfer.coeffs.size(); ++i)
        for (std::size_t j = i + 1; j < b.transfer.coeffs.size(); ++j)
            CHECK(commutator_defect(b.transfer.coeffs[i], b.transfer.coeffs[j]) < 1e-12);

    const Complex u(0.8, -0.9);
    Complex expect(0.0);
    {
        Complex ap(1.0), dp(1.0);
        for (int m = 0; m < spec.n; ++m) {
            ap *= u * spec.q_lambda(m) - spec.z[m] / spec.q_lambda(m);
            dp *= u / spec.q_lambda(m) - spec.z[m] * spec.q_lambda(m);
        }
        expect = ap + spec.kappa * dp;
    }
    const CVector v = sp.highest_weight_vector();
    const CVector tv = oppoly_apply(b.transfer, u, v);
    CHECK(std::abs(tv(0) - expect) <= 1e-12 * std::abs(expect));
    CHECK(grading_leak(sp, b.B, +1) < 1e-12);
}
