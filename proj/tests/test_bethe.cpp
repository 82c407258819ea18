#include <doctest.h>

#include <algorithm>

#include "tq/bethe.hpp"

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

ModelSpec mult_spec(std::vector<int> d, std::vector<Complex> z, Complex q, Complex kappa) {
    ModelSpec s;
    s.variant = Variant::Multiplicative;
    s.n = static_cast<int>(d.size());
    for (int dd : d) s.weights.push_back(Weight::integral_multiplicative(dd));
    s.z = std::move(z);
    s.q = q;
    s.kappa = kappa;
    return s;
}

}  // namespace

TEST_CASE("bae_residual closed forms") {
    // empty system at level zero
    const ModelSpec s0 = additive_spec({1}, {Complex(0.0)}, Complex(2.0));
    CHECK(bae_residual(s0, {}, s0.kappa).size() == 0);

    // one coordinate, closed-form root t = z - L (1+kappa)/(1-kappa)
    CHECK(std::abs(bae_residual(s0, {Complex(1.5)}, Complex(2.0))(0)) < 1e-14);

    // the string seeds annihilate the kappa=0 system exactly
    const ModelSpec s1 =
        additive_spec({2, 1}, {Complex(0.4, 0.3), Complex(3.1, -0.8)}, Complex(0.0));
    for (auto& [seed, t0] : seeds_kappa0(s1, 3))
        CHECK(bae_relative_residual(s1, t0, Complex(0.0)) < 1e-14);

    const ModelSpec sq = mult_spec({1, 2}, {Complex(1.0), Complex(3.7, 0.4)},
                                   Complex(1.2), Complex(0.0));
    for (auto& [seed, t0] : seeds_kappa0(sq, 2))
        CHECK(bae_relative_residual(sq, t0, Complex(0.0)) < 1e-14);
}

TEST_CASE("seed coordinates match the string formulas") {
    const ModelSpec s = additive_spec({1, 1}, {Complex(0.0), Complex(5.0)}, Complex(0.0));
    const auto seeds = seeds_kappa0(s, 1);
    REQUIRE(seeds.size() == 2);
    // lexicographic order: (0,1) then (1,0)
    CHECK(seeds[0].first.nu == std::vector<int>{0, 1});
    CHECK(std::abs(seeds[0].second[0] - Complex(4.5)) < 1e-14);
    CHECK(seeds[1].first.nu == std::vector<int>{1, 0});
    CHECK(std::abs(seeds[1].second[0] - Complex(-0.5)) < 1e-14);

    const ModelSpec s2 = additive_spec({2}, {Complex(0.0)}, Complex(0.0));
    const auto seeds2 = seeds_kappa0(s2, 2);
    REQUIRE(seeds2.size() == 1);
    CHECK(std::abs(seeds2[0].second[0] - Complex(-1.0)) < 1e-14);
    CHECK(std::abs(seeds2[0].second[1] - Complex(0.0)) < 1e-14);

    const ModelSpec sq = mult_spec({1}, {Complex(1.0)}, Complex(1.2), Complex(0.0));
    const auto seedsq = seeds_kappa0(sq, 1);
    REQUIRE(seedsq.size() == 1);
    CHECK(std::abs(seedsq[0].second[0] - Complex(1.0 / 1.2)) < 1e-14);

    // out-of-range compositions are flagged
    const auto deep = seeds_kappa0(s2, 3);
    REQUIRE(deep.size() == 1);
    CHECK_FALSE(deep[0].first.in_Zlo);
}

TEST_CASE("analytic jacobian agrees with finite differences") {
    Rng rng(77);
    const ModelSpec specs[2] = {
        additive_spec({1, 2}, {Complex(0.2, -0.3), Complex(2.9, 0.4)}, Complex(1.3, 0.7)),
        mult_spec({1, 2}, {Complex(1.0), Complex(3.7, 0.9)}, Complex(1.21), Complex(0.8, 1.1))};
    for (const auto& spec : specs) {
        for (int trial = 0; trial < 4; ++trial) {
            std::vector<Complex> t;
            for (int a = 0; a < 3; ++a) t.push_back(rng.annulus(0.4, 2.0));
            const CMatrix ja = bae_jacobian(spec, t, spec.kappa);
            const double h = 1e-6;
            CMatrix jfd(3, 3);
            for (int b = 0; b < 3; ++b) {
                auto tp = t, tm = t;
                tp[static_cast<std::size_t>(b)] += h;
                tm[static_cast<std::size_t>(b)] -= h;
                jfd.col(b) =
                    (bae_residual(spec, tp, spec.kappa) - bae_residual(spec, tm, spec.kappa)) /
                    (2.0 * h);
            }
            CHECK((ja - jfd).norm() <= 1e-6 * ja.norm());
        }
    }
    // one-coordinate closed form: d/dt[(t-z+L) - kappa (t-z-L)] = 1 - kappa
    const ModelSpec s0 = additive_spec({1}, {Complex(0.0)}, Complex(2.0));
    CHECK(std::abs(bae_jacobian(s0, {Complex(0.3, 0.1)}, Complex(2.0))(0, 0) -
                   Complex(-1.0)) < 1e-14);
}

TEST_CASE("residual is equivariant under coordinate permutations") {
    Rng rng(78);
    const ModelSpec spec =
        additive_spec({1, 2}, {Complex(0.1, 0.2), Complex(3.0, -0.4)}, Complex(0.9, 0.5));
    std::vector<Complex> t;
    for (int a = 0; a < 4; ++a) t.push_back(rng.annulus(0.3, 2.0));
    const CVector base = bae_residual(spec, t, spec.kappa);
    std::vector<std::size_t> perm = {2, 0, 3, 1};
    std::vector<Complex> tp(4);
    for (std::size_t i = 0; i < 4; ++i) tp[i] = t[perm[i]];
    const CVector permuted = bae_residual(spec, tp, spec.kappa);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(std::abs(permuted(static_cast<Index>(i)) - base(static_cast<Index>(perm[i]))) <
              1e-12 * (1.0 + std::abs(base(static_cast<Index>(perm[i])))));
}

TEST_CASE("tracker reaches the closed-form target") {
    const ModelSpec spec = additive_spec({1}, {Complex(0.0)}, Complex(2.0));
    const auto seeds = seeds_kappa0(spec, 1);
    const BetheSolution sol = track_path(spec, seeds[0].first, seeds[0].second, Complex(2.0));
    REQUIRE(sol.path_status == PathStatus::Converged);
    CHECK(std::abs(sol.t[0] - Complex(1.5)) < 1e-10);
    CHECK(sol.residual < 1e-10);
    CHECK(sol.admissible);
    CHECK(sol.offdiagonal);

    // level zero is trivially converged
    const BetheSolution s0 = track_path(spec, SeedIndex{{0}, true}, {}, Complex(2.0));
    CHECK(s0.path_status == PathStatus::Converged);
    CHECK(s0.t.empty());
}

TEST_CASE("both level-2 seeds converge for two factors") {
    const ModelSpec spec =
        additive_spec({1, 1}, {Complex(0.0), Complex(3.1)}, Complex(1.7, 0.4));
    int converged = 0;
    for (auto& [seed, t0] : seeds_kappa0(spec, 2)) {
        if (!seed.in_Zlo) continue;
        const BetheSolution sol = track_path(spec, seed, t0, spec.kappa);
        if (sol.path_status == PathStatus::Converged && sol.residual < 1e-9) ++converged;
    }
    CHECK(converged == 1);  // dim V[2] = 1 for two spin-1/2 factors
}

TEST_CASE("classification flags") {
    const ModelSpec spec = additive_spec({1, 1}, {Complex(0.0), Complex(5.0)}, Complex(2.0));
    BetheSolution sol;
    sol.t = {Complex(10.0, 1.0), Complex(10.0, 3.0)};
    classify(spec, sol);
    CHECK(sol.offdiagonal);
    CHECK(sol.admissible);
    CHECK(sol.string_detected == -1);

    sol.t = {Complex(-0.5), Complex(0.5)};  // full string of factor 1
    classify(spec, sol);
    CHECK(sol.string_detected == 0);
    CHECK_FALSE(sol.admissible);

    sol.t = {Complex(1.0, 1.0), Complex(1.0, 1.0)};
    classify(spec, sol);
    CHECK_FALSE(sol.offdiagonal);
}

TEST_CASE("orbit dedup groups permuted tuples") {
    const ModelSpec spec = additive_spec({1, 1}, {Complex(0.0), Complex(5.0)}, Complex(2.0));
    BetheSolution a, b, c;
    a.t = {Complex(1.0), Complex(2.0)};
    b.t = {Complex(2.0), Complex(1.0)};
    c.t = {Complex(4.0), Complex(7.0)};
    const auto orbits = orbit_dedup(spec, {a, b, c});
    REQUIRE(orbits.size() == 2);
    CHECK(orbits[0].multiplicity == 2);
    CHECK(orbits[1].multiplicity == 1);

    const auto single = orbit_dedup(spec, {BetheSolution{}});
    CHECK(single.size() == 1);
}

TEST_CASE("eigenvalue polynomial properties") {
    const Complex kappa(2.0);
    const ModelSpec spec = additive_spec({1}, {Complex(0.0)}, kappa);

    // level zero: product formula
    const CPoly tau0 = eigenvalue_tau(spec, {}, kappa);
    CHECK(std::abs(poly_eval(tau0, Complex(0.7)) -
                   ((0.7 + 0.5) + kappa * (0.7 - 0.5))) < 1e-13);

    // the closed-form root: tau (u - t) equals the two-sided product identity
    const Complex t(1.5);
    const CPoly tau = eigenvalue_tau(spec, {t}, kappa);
    CHECK(tau.degree() == 1);
    CHECK(std::abs(tau.coeffs.back() - (1.0 + kappa)) < 1e-13);
    for (const Complex u : {Complex(0.3, 0.2), Complex(-1.0, 0.8), Complex(2.4), Complex(0.9)}) {
        const Complex lhs = poly_eval(tau, u) * (u - t);
        const Complex rhs = (u + 0.5) * (u - t - 1.0) + kappa * (u - 0.5) * (u - t + 1.0);
        CHECK(std::abs(lhs - rhs) < 1e-12 * (1.0 + std::abs(rhs)));
    }

    // a random non-solution leaves a visible residue
    CHECK_THROWS_AS(eigenvalue_tau(spec, {Complex(0.9, 0.4)}, kappa), std::runtime_error);
}

TEST_CASE("multiplicative scaling covariance") {
    // if t solves the system for z, then c t solves it for c z
    const ModelSpec spec = mult_spec({1, 2}, {Complex(1.0), Complex(3.7, 0.9)},
                                     Complex(1.21), Complex(0.8, 1.1));
    for (auto& [seed, t0] : seeds_kappa0(spec, 2)) {
        if (!seed.in_Zlo) continue;
        const BetheSolution sol = track_path(spec, seed, t0, spec.kappa);
        if (sol.path_status != PathStatus::Converged) continue;
        const Complex c(0.6, 1.3);
        ModelSpec scaled = spec;
        for (auto& zm : scaled.z) zm *= c;
        std::vector<Complex> ct = sol.t;
        for (auto& ta : ct) ta *= c;
        CHECK(bae_relative_residual(scaled, ct, spec.kappa) < 1e-10);
    }
}
