#include "tq/bethe_vectors.hpp"

#include <algorithm>
#include <cmath>

namespace tq {

BetheVector bethe_vector_product(const TensorSpace& space, const MonodromyBundle& bundle,
                                 const std::vector<Complex>& t) {
    CVector full = space.highest_weight_vector();
    for (std::size_t a = t.size(); a-- > 0;) full = oppoly_apply(bundle.B, t[a], full);

    const int ell = static_cast<int>(t.size());
    BetheVector w;
    w.t = t;
    w.construction = Construction::OperatorProduct;
    w.coords = space.extract_block(full, ell);
    const double total = full.norm();
    const double inblock = w.coords.norm();
    w.off_block_mass =
        total > 0.0 ? std::sqrt(std::max(total * total - inblock * inblock, 0.0)) / total : 0.0;
    return w;
}

BetheVector bethe_vector_sum(const ModelSpec& spec, const TensorSpace& space,
                             const std::vector<Complex>& t) {
    const std::size_t l = t.size();
    const int ell = static_cast<int>(l);
    const double dd = spec.tol.dedup_tol * spec.scale();
    for (std::size_t a = 0; a < l; ++a)
        for (std::size_t b = a + 1; b < l; ++b)
            if (std::abs(t[a] - t[b]) < dd) throw std::invalid_argument("diagonal t");

    const std::size_t n = static_cast<std::size_t>(spec.n);
    // factor tables: plus[a][m] when a sits in a later block than m,
    // minus[a][m] when a sits in an earlier block than m
    std::vector<std::vector<Complex>> plus(l, std::vector<Complex>(n));
    std::vector<std::vector<Complex>> minus(l, std::vector<Complex>(n));
    for (std::size_t a = 0; a < l; ++a) {
        for (std::size_t m = 0; m < n; ++m) {
            const Complex zm = spec.z[m];
            if (spec.variant == Variant::Additive) {
                const Complex lm = spec.weights[m].lambda;
                plus[a][m] = t[a] - zm + lm;
                minus[a][m] = t[a] - zm - lm;
            } else {
                const Complex ql = spec.q_lambda(static_cast<int>(m));
                plus[a][m] = ql * t[a] - zm / ql;
                minus[a][m] = t[a] / ql - ql * zm;
            }
        }
    }
    std::vector<std::vector<Complex>> ratio(l, std::vector<Complex>(l, Complex(1.0)));
    for (std::size_t a = 0; a < l; ++a)
        for (std::size_t b = 0; b < l; ++b) {
            if (a == b) continue;
            if (spec.variant == Variant::Additive)
                ratio[a][b] = (t[a] - t[b] - 1.0) / (t[a] - t[b]);
            else
                ratio[a][b] = (t[a] / spec.q - spec.q * t[b]) / (t[a] - t[b]);
        }

    BetheVector w;
    w.t = t;
    w.construction = Construction::PartitionSum;
    w.coords = CVector::Zero(space.block_dim(ell));
    const auto& block = space.weight_blocks[static_cast<std::size_t>(ell)];

    std::vector<std::size_t> asg(l, 0);  // module assignment per coordinate
    std::vector<int> nu(n, 0);
    for (;;) {
        std::fill(nu.begin(), nu.end(), 0);
        for (std::size_t a = 0; a < l; ++a) ++nu[asg[a]];

        // F^nu vanishes beyond the top of an integral module; skip those terms
        bool vanishes = false;
        for (std::size_t m = 0; m < n; ++m)
            if (nu[m] > space.dims[m] - 1) {
                vanishes = true;
                break;
            }
        if (!vanishes) {
            Complex weight(1.0);
            for (std::size_t a = 0; a < l; ++a) {
                for (std::size_t m = 0; m < asg[a]; ++m) weight *= plus[a][m];
                for (std::size_t m = asg[a] + 1; m < n; ++m) weight *= minus[a][m];
            }
            for (std::size_t a = 0; a < l; ++a)
                for (std::size_t b = 0; b < l; ++b)
                    if (asg[a] > asg[b]) weight *= ratio[a][b];

            const Index flat = space.flat(nu);
            const auto it = std::lower_bound(block.begin(), block.end(), flat);
            w.coords(static_cast<Index>(it - block.begin())) += weight;
        }

        // odometer over assignments
        std::size_t pos = 0;
        while (pos < l) {
            if (++asg[pos] < n) break;
            asg[pos] = 0;
            ++pos;
        }
        if (pos == l) break;
    }

    if (spec.variant == Variant::Multiplicative) {
        // the operator-product normalization carries one factor
        // t_a (q - q^{-1}) per B application
        Complex pref(1.0);
        for (std::size_t a = 0; a < l; ++a) pref *= t[a] * (spec.q - 1.0 / spec.q);
        w.coords *= pref;
    }
    return w;
}

EigenCheck eigen_residual(const ModelSpec& spec, const TensorSpace& space,
                          const MonodromyBundle& bundle, Complex kappa,
                          const std::vector<Complex>& t, const CPoly& tau, int sample_count) {
    const BetheVector w = bethe_vector_product(space, bundle, t);
    const int ell = static_cast<int>(t.size());
    const CVector wfull = space.embed_block(w.coords, ell);

    EigenCheck out;
    out.w_norm = w.coords.norm();
    out.trivial = out.w_norm < spec.tol.residual_tol * spec.scale();
    if (out.trivial) return out;

    const OpPoly op = transfer_at(bundle, kappa);
    Complex center(0.0);
    for (const auto& zm : spec.z) center += zm;
    center /= double(spec.n);
    const double radius = 2.3 * spec.scale() + 1.0;

    double worst = 0.0;
    for (int j = 0; j < sample_count; ++j) {
        const double phi = 6.283185307179586 * (double(j) + 0.37) / double(sample_count);
        const Complex u = center + radius * Complex(std::cos(phi), std::sin(phi));
        const CMatrix tu = op.eval(u);
        const CVector lhs = tu * wfull;
        const CVector rhs = poly_eval(tau, u) * wfull;
        const double den = std::max(tu.norm() * out.w_norm, 1e-300);
        worst = std::max(worst, (lhs - rhs).norm() / den);
    }
    out.residual = worst;
    return out;
}

Complex dual_pairing(const TensorSpace& space, const MonodromyBundle& bundle,
                     const std::vector<Complex>& t, const std::vector<Complex>& t_other) {
    if (t.size() != t_other.size()) throw std::invalid_argument("dual_pairing: ell mismatch");
    CVector full = space.highest_weight_vector();
    for (std::size_t a = t.size(); a-- > 0;) full = oppoly_apply(bundle.B, t[a], full);
    for (std::size_t a = t_other.size(); a-- > 0;)
        full = oppoly_apply(bundle.C, t_other[a], full);
    return full(0);
}

Complex norm_determinant(const ModelSpec& spec, const std::vector<Complex>& t, Complex kappa) {
    const std::size_t l = t.size();
    if (l == 0) return Complex(1.0);
    const double dd = spec.tol.dedup_tol * spec.scale();
    for (std::size_t a = 0; a < l; ++a)
        for (std::size_t b = a + 1; b < l; ++b)
            if (std::abs(t[a] - t[b]) < dd)
                throw std::invalid_argument("norm_determinant: diagonal t");

    const CMatrix j = bae_jacobian(spec, t, kappa);
    const Complex det = j.determinant();

    // prefactor times det J over the Vandermonde-type product of coordinate
    // differences; the multiplicative q-exponent -2 Lambda l - l(l-1) carries
    // the operator-product normalization of w(t)
    Complex pref = (l % 2 == 0) ? Complex(1.0) : Complex(-1.0);
    if (spec.variant == Variant::Additive) {
        for (int m = 0; m < spec.n; ++m)
            for (std::size_t a = 0; a < l; ++a)
                pref *= t[a] - spec.z[static_cast<std::size_t>(m)] -
                        spec.weights[static_cast<std::size_t>(m)].lambda;
    } else {
        Complex qpow(1.0);
        for (int m = 0; m < spec.n; ++m)
            for (std::size_t a = 0; a < l; ++a) qpow /= spec.q_two_lambda(m);
        for (std::size_t k = 0; k < l * (l - 1); ++k) qpow /= spec.q;
        pref *= qpow;
        for (std::size_t a = 0; a < l; ++a) pref *= (spec.q - 1.0 / spec.q) * t[a];
        for (int m = 0; m < spec.n; ++m)
            for (std::size_t a = 0; a < l; ++a)
                pref *= t[a] - spec.q_two_lambda(m) * spec.z[static_cast<std::size_t>(m)];
    }
    for (std::size_t a = 0; a < l; ++a)
        for (std::size_t b = 0; b < l; ++b)
            if (a != b) pref /= t[a] - t[b];
    return pref * det;
}

RankResult basis_rank(const std::vector<BetheVector>& vectors, const TensorSpace& space, int ell,
                      const ToleranceProfile& tol) {
    if (vectors.empty()) return {0, 0.0};
    CMatrix stack(space.block_dim(ell), static_cast<Index>(vectors.size()));
    for (std::size_t k = 0; k < vectors.size(); ++k) {
        if (vectors[k].coords.size() != space.block_dim(ell))
            throw std::invalid_argument("basis_rank: vector outside V[ell]");
        stack.col(static_cast<Index>(k)) = vectors[k].coords;
    }
    return matrix_rank(stack, tol);
}

double singular_check(const TensorSpace& space, const BetheVector& w, int ell) {
    const double nw = w.coords.norm();
    if (nw == 0.0) throw std::invalid_argument("singular_check: trivial vector");
    const CVector full = space.embed_block(w.coords, ell);
    return (space.de * full).norm() / nw;
}

ModelSpec permuted_spec(const ModelSpec& spec, const std::vector<int>& sigma) {
    ModelSpec out = spec;
    for (int m = 0; m < spec.n; ++m) {
        out.weights[static_cast<std::size_t>(m)] =
            spec.weights[static_cast<std::size_t>(sigma[static_cast<std::size_t>(m)])];
        out.z[static_cast<std::size_t>(m)] =
            spec.z[static_cast<std::size_t>(sigma[static_cast<std::size_t>(m)])];
    }
    return out;
}

IntertwinerFit permutation_intertwiner(const ModelSpec& spec, const std::vector<int>& sigma,
                                       int samples_per_level, Rng& rng) {
    const ModelSpec spec_s = permuted_spec(spec, sigma);
    const int lmax = spec.total_steps();
    const TensorSpace space = build_space(spec, lmax);
    const TensorSpace space_s = build_space(spec_s, lmax);
    const MonodromyBundle bundle = monodromy(spec, space);
    const MonodromyBundle bundle_s = monodromy(spec_s, space_s);

    const double r = 1.5 * spec.scale();
    const auto draw_tuple = [&](int ell) {
        std::vector<Complex> t;
        for (int a = 0; a < ell; ++a) t.push_back(rng.annulus(0.3 * r, r));
        return t;
    };

    IntertwinerFit fit;
    fit.map = CMatrix::Zero(space.dim, space.dim);
    double worst_fit = 0.0, worst_val = 0.0;

    for (int ell = 0; ell <= lmax; ++ell) {
        const Index bd = space.block_dim(ell);
        const int k = std::max<int>(samples_per_level, static_cast<int>(bd) + 2);
        CMatrix wmat(bd, k), wmat_s(bd, k);
        for (int i = 0; i < k; ++i) {
            const auto t = draw_tuple(ell);
            wmat.col(i) = bethe_vector_product(space, bundle, t).coords;
            wmat_s.col(i) = bethe_vector_product(space_s, bundle_s, t).coords;
        }
        // M_l minimizing ||M W - W^s||_F: transpose to the standard
        // least-squares problem W^T M^T = (W^s)^T.
        Eigen::JacobiSVD<CMatrix> svd(wmat.transpose(),
                                      Eigen::ComputeThinU | Eigen::ComputeThinV);
        if (svd.rank() < bd) throw std::runtime_error("rank-deficient sample set");
        const CMatrix m_l = svd.solve(wmat_s.transpose()).transpose();
        const CMatrix resid = m_l * wmat - wmat_s;
        worst_fit = std::max(worst_fit, resid.norm() / std::max(wmat_s.norm(), 1e-300));

        // fresh out-of-sample tuples
        for (int i = 0; i < 4; ++i) {
            const auto t = draw_tuple(ell);
            const CVector lhs = m_l * bethe_vector_product(space, bundle, t).coords;
            const CVector rhs = bethe_vector_product(space_s, bundle_s, t).coords;
            worst_val = std::max(worst_val, (lhs - rhs).norm() / std::max(rhs.norm(), 1e-300));
        }

        const auto& blk = space.weight_blocks[static_cast<std::size_t>(ell)];
        const auto& blk_s = space_s.weight_blocks[static_cast<std::size_t>(ell)];
        for (std::size_t i = 0; i < blk_s.size(); ++i)
            for (std::size_t j2 = 0; j2 < blk.size(); ++j2)
                fit.map(blk_s[i], blk[j2]) = m_l(static_cast<Index>(i), static_cast<Index>(j2));
    }
    fit.fit_residual = worst_fit;
    fit.validation_residual = worst_val;
    return fit;
}

}  // namespace tq
