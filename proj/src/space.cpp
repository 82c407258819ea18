#include "tq/space.hpp"

namespace tq {

CMatrix kron(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

namespace {

CMatrix embed_factor(const std::vector<int>& dims, int m, const CMatrix& small) {
    CMatrix acc = CMatrix::Identity(1, 1);
    for (std::size_t k = 0; k < dims.size(); ++k) {
        if (static_cast<int>(k) == m)
            acc = kron(acc, small);
        else
            acc = kron(acc, CMatrix::Identity(dims[k], dims[k]));
    }
    return acc;
}

/// q-integer [k] = (q^k - q^{-k}) / (q - q^{-1}).
Complex q_int(Complex q, int k) {
    Complex num = std::pow(q, k) - std::pow(q, -k);
    return num / (q - 1.0 / q);
}

}  // namespace

Index TensorSpace::flat(const std::vector<int>& nu) const {
    Index idx = 0;
    for (std::size_t m = 0; m < dims.size(); ++m) idx = idx * dims[m] + nu[m];
    return idx;
}

std::vector<int> TensorSpace::nu_of(Index f) const {
    std::vector<int> nu(dims.size());
    for (std::size_t m = dims.size(); m-- > 0;) {
        nu[m] = static_cast<int>(f % dims[m]);
        f /= dims[m];
    }
    return nu;
}

CVector TensorSpace::extract_block(const CVector& full, int ell) const {
    const auto& blk = weight_blocks[static_cast<std::size_t>(ell)];
    CVector v(static_cast<Index>(blk.size()));
    for (std::size_t i = 0; i < blk.size(); ++i) v(static_cast<Index>(i)) = full(blk[i]);
    return v;
}

CVector TensorSpace::embed_block(const CVector& blockv, int ell) const {
    const auto& blk = weight_blocks[static_cast<std::size_t>(ell)];
    CVector full = CVector::Zero(dim);
    for (std::size_t i = 0; i < blk.size(); ++i) full(blk[i]) = blockv(static_cast<Index>(i));
    return full;
}

CVector TensorSpace::highest_weight_vector() const {
    CVector v = CVector::Zero(dim);
    v(0) = 1.0;
    return v;
}

TensorSpace build_space(const ModelSpec& spec, int ell_max) {
    spec.validate();
    for (const auto& w : spec.weights)
        if (!w.integral && w.truncation < ell_max + 1)
            throw std::invalid_argument("truncation too shallow for requested ell_max");

    TensorSpace sp;
    sp.variant = spec.variant;
    for (const auto& w : spec.weights) sp.dims.push_back(w.dim());
    sp.dim = 1;
    for (int d : sp.dims) sp.dim *= d;

    for (int m = 0; m < spec.n; ++m) {
        const Weight& w = spec.weights[static_cast<std::size_t>(m)];
        const int d = w.dim();
        CMatrix e = CMatrix::Zero(d, d), f = CMatrix::Zero(d, d);
        for (int k = 0; k + 1 < d; ++k) f(k + 1, k) = 1.0;

        if (spec.variant == Variant::Additive) {
            CMatrix h = CMatrix::Zero(d, d);
            const Complex lam = w.integral ? Complex(0.5 * w.steps) : w.lambda;
            for (int k = 0; k < d; ++k) h(k, k) = lam - double(k);
            for (int k = 1; k < d; ++k) e(k - 1, k) = double(k) * (2.0 * lam - double(k) + 1.0);
            sp.h_ops.push_back(embed_factor(sp.dims, m, h));
        } else {
            const Complex ql = spec.q_lambda(m);
            const Complex q2l = spec.q_two_lambda(m);
            CMatrix qh = CMatrix::Zero(d, d), qhi = CMatrix::Zero(d, d);
            for (int k = 0; k < d; ++k) {
                const Complex qk = std::pow(spec.q, -k);
                qh(k, k) = ql * qk;
                qhi(k, k) = 1.0 / (ql * qk);
            }
            // e f^k v = [k] [2 Lambda - k + 1] f^{k-1} v
            for (int k = 1; k < d; ++k) {
                const Complex bracket =
                    (q2l * std::pow(spec.q, 1 - k) - std::pow(spec.q, k - 1) / q2l) /
                    (spec.q - 1.0 / spec.q);
                e(k - 1, k) = q_int(spec.q, k) * bracket;
            }
            sp.qh_ops.push_back(embed_factor(sp.dims, m, qh));
            sp.qh_inv_ops.push_back(embed_factor(sp.dims, m, qhi));
        }
        sp.e_ops.push_back(embed_factor(sp.dims, m, e));
        sp.f_ops.push_back(embed_factor(sp.dims, m, f));
    }

    if (spec.variant == Variant::Additive) {
        sp.de = CMatrix::Zero(sp.dim, sp.dim);
        sp.df = CMatrix::Zero(sp.dim, sp.dim);
        sp.dh = CMatrix::Zero(sp.dim, sp.dim);
        for (int m = 0; m < spec.n; ++m) {
            sp.de += sp.e_ops[static_cast<std::size_t>(m)];
            sp.df += sp.f_ops[static_cast<std::size_t>(m)];
            sp.dh += sp.h_ops[static_cast<std::size_t>(m)];
        }
    } else {
        // coproduct: delta(e) = sum_m q^h x..x q^h x e_m x q^{-h} x..x q^{-h}
        sp.de = CMatrix::Zero(sp.dim, sp.dim);
        sp.df = CMatrix::Zero(sp.dim, sp.dim);
        for (int m = 0; m < spec.n; ++m) {
            CMatrix term = sp.e_ops[static_cast<std::size_t>(m)];
            CMatrix termf = sp.f_ops[static_cast<std::size_t>(m)];
            for (int k = 0; k < m; ++k) {
                term = sp.qh_ops[static_cast<std::size_t>(k)] * term;
                termf = sp.qh_inv_ops[static_cast<std::size_t>(k)] * termf;
            }
            for (int k = m + 1; k < spec.n; ++k) {
                term = term * sp.qh_inv_ops[static_cast<std::size_t>(k)];
                termf = termf * sp.qh_ops[static_cast<std::size_t>(k)];
            }
            sp.de += term;
            sp.df += termf;
        }
    }

    int max_level = 0;
    for (int d : sp.dims) max_level += d - 1;
    sp.weight_blocks.assign(static_cast<std::size_t>(max_level) + 1, {});
    for (Index i = 0; i < sp.dim; ++i) {
        const auto nu = sp.nu_of(i);
        int l = 0;
        for (int x : nu) l += x;
        sp.weight_blocks[static_cast<std::size_t>(l)].push_back(i);
    }
    return sp;
}

CMatrix singular_projector(const TensorSpace& space, int ell) {
    if (ell < 0 || ell >= space.levels()) throw std::invalid_argument("ell out of range");
    if (ell == 0) return CMatrix(0, space.block_dim(0));
    const auto& rows = space.weight_blocks[static_cast<std::size_t>(ell - 1)];
    const auto& cols = space.weight_blocks[static_cast<std::size_t>(ell)];
    CMatrix m(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) m(i, j) = space.de(rows[i], cols[j]);
    return m;
}

int sing_dim(const TensorSpace& space, int ell, const ToleranceProfile& tol) {
    const CMatrix m = singular_projector(space, ell);
    const int r = m.rows() == 0 ? 0 : matrix_rank(m, tol).rank;
    return static_cast<int>(space.block_dim(ell)) - r;
}

}  // namespace tq
