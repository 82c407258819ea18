#include "tq/sov.hpp"

#include <algorithm>
#include <cmath>

namespace tq {

Index SovFamily::flat(const std::vector<int>& idx) const {
    Index f = 0;
    for (std::size_t m = 0; m < dims.size(); ++m) f = f * dims[m] + idx[m];
    return f;
}

std::vector<int> SovFamily::idx_of(Index f) const {
    std::vector<int> idx(dims.size());
    for (std::size_t m = dims.size(); m-- > 0;) {
        idx[m] = static_cast<int>(f % dims[m]);
        f /= dims[m];
    }
    return idx;
}

namespace {

struct LatticeGeometry {
    const ModelSpec* spec;
    const SeparationLattice* lattice;
    std::vector<int> dims;
    Index dim;

    Complex coord(const std::vector<int>& idx, int m) const {
        return (*lattice).sets[static_cast<std::size_t>(m)][static_cast<std::size_t>(idx[m])];
    }
};

LatticeGeometry geometry(const ModelSpec& spec, const SeparationLattice& lattice) {
    LatticeGeometry g;
    g.spec = &spec;
    g.lattice = &lattice;
    for (const auto& s : lattice.sets) g.dims.push_back(static_cast<int>(s.size()));
    g.dim = 1;
    for (int d : g.dims) g.dim *= d;
    return g;
}

/// y_m^+ : value at the point one lattice step below in coordinate m,
/// times the Delta^+ prefactor evaluated at the current coordinate.
CMatrix build_yplus(const LatticeGeometry& g, int m) {
    const ModelSpec& spec = *g.spec;
    CMatrix y = CMatrix::Zero(g.dim, g.dim);
    std::vector<int> idx(g.dims.size(), 0);
    for (Index p = 0; p < g.dim; ++p) {
        Index rest = p;
        for (std::size_t k = g.dims.size(); k-- > 0;) {
            idx[k] = static_cast<int>(rest % g.dims[k]);
            rest /= g.dims[k];
        }
        if (idx[static_cast<std::size_t>(m)] == 0) continue;  // prefactor vanishes exactly
        const Complex xm = g.coord(idx, m);
        Complex pref(1.0);
        for (int j = 0; j < spec.n; ++j) {
            if (spec.variant == Variant::Additive)
                pref *= xm - spec.z[static_cast<std::size_t>(j)] +
                        spec.weights[static_cast<std::size_t>(j)].lambda;
            else
                pref *= spec.q_two_lambda(j) * xm - spec.z[static_cast<std::size_t>(j)];
        }
        std::vector<int> src = idx;
        --src[static_cast<std::size_t>(m)];
        Index q = 0;
        for (std::size_t k = 0; k < g.dims.size(); ++k) q = q * g.dims[k] + src[k];
        y(p, q) = pref;
    }
    return y;
}

CMatrix build_yminus(const LatticeGeometry& g, int m) {
    const ModelSpec& spec = *g.spec;
    CMatrix y = CMatrix::Zero(g.dim, g.dim);
    std::vector<int> idx(g.dims.size(), 0);
    for (Index p = 0; p < g.dim; ++p) {
        Index rest = p;
        for (std::size_t k = g.dims.size(); k-- > 0;) {
            idx[k] = static_cast<int>(rest % g.dims[k]);
            rest /= g.dims[k];
        }
        if (idx[static_cast<std::size_t>(m)] + 1 >= g.dims[static_cast<std::size_t>(m)])
            continue;  // prefactor vanishes exactly at the top of the lattice
        const Complex xm = g.coord(idx, m);
        Complex pref(1.0);
        for (int j = 0; j < spec.n; ++j) {
            if (spec.variant == Variant::Additive)
                pref *= xm - spec.z[static_cast<std::size_t>(j)] -
                        spec.weights[static_cast<std::size_t>(j)].lambda;
            else
                pref *= xm - spec.q_two_lambda(j) * spec.z[static_cast<std::size_t>(j)];
        }
        std::vector<int> src = idx;
        ++src[static_cast<std::size_t>(m)];
        Index q = 0;
        for (std::size_t k = 0; k < g.dims.size(); ++k) q = q * g.dims[k] + src[k];
        y(p, q) = pref;
    }
    return y;
}

/// T(u) assembled pointwise at one interpolation node.
CMatrix transfer_at_node(const LatticeGeometry& g, const SovFamily& fam, Complex coupling,
                         Complex u) {
    const ModelSpec& spec = *g.spec;
    CMatrix t = CMatrix::Zero(g.dim, g.dim);
    std::vector<int> idx(g.dims.size(), 0);

    Complex kappa_like = coupling;
    Complex diag_pref(1.0);
    if (spec.variant == Variant::Multiplicative) {
        Complex q2lam(1.0);
        for (int m = 0; m < spec.n; ++m) q2lam *= spec.q_two_lambda(m);
        diag_pref = 1.0 + q2lam * coupling;
    } else {
        diag_pref = 1.0 + coupling;
    }

    for (Index p = 0; p < g.dim; ++p) {
        Index rest = p;
        for (std::size_t k = g.dims.size(); k-- > 0;) {
            idx[k] = static_cast<int>(rest % g.dims[k]);
            rest /= g.dims[k];
        }
        Complex diag = diag_pref;
        for (int m = 0; m < spec.n; ++m) {
            const Complex xm = g.coord(idx, m);
            if (spec.variant == Variant::Additive)
                diag *= u - xm;
            else
                diag *= spec.z[static_cast<std::size_t>(m)] * (u / xm - 1.0);
        }
        t(p, p) += diag;

        for (int m = 0; m < spec.n; ++m) {
            const Complex xm = g.coord(idx, m);
            Complex lag(1.0);
            for (int k = 0; k < spec.n; ++k) {
                if (k == m) continue;
                const Complex xk = g.coord(idx, k);
                lag *= (u - xk) / (xm - xk);
            }
            if (spec.variant == Variant::Multiplicative) lag *= u / xm;
            t.row(p) += lag * (fam.yplus[static_cast<std::size_t>(m)].row(p) +
                               kappa_like * fam.yminus[static_cast<std::size_t>(m)].row(p));
        }
    }
    return t;
}

std::vector<Complex> interpolation_nodes(const ModelSpec& spec, int count) {
    Complex center(0.0);
    for (const auto& zm : spec.z) center += zm;
    center /= double(spec.n);
    const double radius = 2.1 * spec.scale() + 1.0;
    std::vector<Complex> nodes;
    for (int j = 0; j < count; ++j) {
        const double phi = 6.283185307179586 * (double(j) + 0.31) / double(count);
        nodes.push_back(center + radius * Complex(std::cos(phi), std::sin(phi)));
    }
    return nodes;
}

/// Coefficients of a matrix polynomial from nodal values (small Vandermonde).
std::vector<CMatrix> interpolate_coeffs(const std::vector<Complex>& nodes,
                                        const std::vector<CMatrix>& values) {
    const int k = static_cast<int>(nodes.size());
    CMatrix vand(k, k);
    for (int i = 0; i < k; ++i) {
        Complex pw(1.0);
        for (int j = 0; j < k; ++j) {
            vand(i, j) = pw;
            pw *= nodes[static_cast<std::size_t>(i)];
        }
    }
    const CMatrix vinv = vand.inverse();
    std::vector<CMatrix> coeffs(static_cast<std::size_t>(k),
                                CMatrix::Zero(values[0].rows(), values[0].cols()));
    for (int c = 0; c < k; ++c)
        for (int i = 0; i < k; ++i)
            coeffs[static_cast<std::size_t>(c)] += vinv(c, i) * values[static_cast<std::size_t>(i)];
    return coeffs;
}

}  // namespace

SovFamily sov_operators(const ModelSpec& spec, const SeparationLattice& lattice,
                        Complex coupling) {
    const LatticeGeometry g = geometry(spec, lattice);
    SovFamily fam;
    fam.dims = g.dims;
    fam.dim = g.dim;
    fam.coupling = coupling;
    for (int m = 0; m < spec.n; ++m) {
        fam.yplus.push_back(build_yplus(g, m));
        fam.yminus.push_back(build_yminus(g, m));
    }
    const auto nodes = interpolation_nodes(spec, spec.n + 1);
    std::vector<CMatrix> values;
    values.reserve(nodes.size());
    for (const auto& u : nodes) values.push_back(transfer_at_node(g, fam, coupling, u));
    fam.coeffs = interpolate_coeffs(nodes, values);
    return fam;
}

std::vector<TauQPair> sov_spectrum(const ModelSpec& spec, const SeparationLattice& lattice,
                                   const SovFamily& family, Rng& rng) {
    // At kappa = 1 (additive) the transfer family is defective on the
    // function space: eigenvalues repeat across sl2 multiplets and Jordan
    // blocks appear.  The raising-completed family T(u)+C(u) is
    // diagonalizable, commutes with the sl2 action, and carries the same
    // eigenvalue polynomials, so the clustering runs on it instead.
    std::vector<CMatrix> diag_family = family.coeffs;
    const bool kappa_one =
        spec.variant == Variant::Additive && std::abs(family.coupling - Complex(1.0)) < 1e-12;
    if (kappa_one) {
        const OpPoly cop = raising_C(spec, lattice);
        for (std::size_t k = 0; k < cop.coeffs.size(); ++k) diag_family[k] += cop.coeffs[k];
    }

    // Generic couplings give a simple joint spectrum; try the plain
    // simultaneous diagonalization first and fall back to the clustered
    // route when the spectrum degenerates.
    std::vector<JointCluster> clusters;
    bool have_clusters = false;
    if (!kappa_one) {
        try {
            const CommutingDiag cd = commuting_diag(diag_family, spec.tol, rng);
            for (Index k = 0; k < family.dim; ++k) {
                JointCluster jc;
                jc.multiplicity = 1;
                jc.op_eigenvalues.resize(static_cast<Index>(cd.eigenvalues.size()));
                for (std::size_t j = 0; j < cd.eigenvalues.size(); ++j)
                    jc.op_eigenvalues(static_cast<Index>(j)) = cd.eigenvalues[j](k);
                jc.eigenvector = cd.eigenvectors.col(k);
                clusters.push_back(std::move(jc));
            }
            have_clusters = true;
        } catch (const std::runtime_error&) {
        }
    }
    if (!have_clusters) clusters = joint_spectrum(diag_family, spec.tol, rng);

    std::vector<TauQPair> out;
    for (const auto& cl : clusters) {
        TauQPair pair;
        pair.source = TauQSource::SoVSpectrum;
        pair.multiplicity = cl.multiplicity;
        std::vector<Complex> tc(cl.op_eigenvalues.data(),
                                cl.op_eigenvalues.data() + cl.op_eigenvalues.size());
        pair.tau = CPoly(std::move(tc));

        // The separated eigenvector always comes from the original family;
        // for a defective family the common eigenvector still exists and is
        // the minimizer of the stacked residual form.
        CVector evec = cl.eigenvector;
        if (kappa_one) {
            const Index n = family.dim;
            CMatrix quad = CMatrix::Zero(n, n);
            for (std::size_t j = 0; j < family.coeffs.size(); ++j) {
                const double w = std::max(family.coeffs[j].norm(), 1.0);
                const CMatrix r = (family.coeffs[j] -
                                   cl.op_eigenvalues(static_cast<Index>(j)) *
                                       CMatrix::Identity(n, n)) /
                                  w;
                quad += r.adjoint() * r;
            }
            Eigen::SelfAdjointEigenSolver<CMatrix> sa(quad);
            evec = sa.eigenvectors().col(0);
        }
        const auto fac = rank_one_factor(evec, family.dims);
        pair.factor_residual = fac.residual;
        pair.q_profile.values.reserve(lattice.points.size());
        for (std::size_t m = 0; m < fac.factors.size(); ++m)
            for (Index i = 0; i < fac.factors[m].size(); ++i)
                pair.q_profile.values.push_back(fac.factors[m](i));
        gauge_fix(pair.q_profile, lattice, spec.tol.margin_tol);
        out.push_back(std::move(pair));
    }
    // deterministic report order: by tau coefficients
    std::sort(out.begin(), out.end(), [](const TauQPair& a, const TauQPair& b) {
        const std::size_t n = std::max(a.tau.coeffs.size(), b.tau.coeffs.size());
        for (std::size_t k = n; k-- > 0;) {
            const Complex ca = k < a.tau.coeffs.size() ? a.tau.coeffs[k] : Complex(0.0);
            const Complex cb = k < b.tau.coeffs.size() ? b.tau.coeffs[k] : Complex(0.0);
            if (ca.real() != cb.real()) return ca.real() < cb.real();
            if (ca.imag() != cb.imag()) return ca.imag() < cb.imag();
        }
        return false;
    });
    return out;
}

SovSl2 sl2_on_F(const ModelSpec& spec, const SeparationLattice& lattice) {
    if (spec.variant != Variant::Additive)
        throw std::invalid_argument("sl2_on_F: defined for the additive variant only");
    const LatticeGeometry g = geometry(spec, lattice);

    std::vector<CMatrix> yminus, yplus;
    for (int m = 0; m < spec.n; ++m) {
        yplus.push_back(build_yplus(g, m));
        yminus.push_back(build_yminus(g, m));
    }

    SovSl2 out;
    out.e = CMatrix::Zero(g.dim, g.dim);
    out.f = CMatrix::Zero(g.dim, g.dim);
    out.h = CMatrix::Zero(g.dim, g.dim);

    std::vector<int> idx(g.dims.size(), 0);
    for (Index p = 0; p < g.dim; ++p) {
        Index rest = p;
        for (std::size_t k = g.dims.size(); k-- > 0;) {
            idx[k] = static_cast<int>(rest % g.dims[k]);
            rest /= g.dims[k];
        }
        for (int m = 0; m < spec.n; ++m) {
            const Complex xm = g.coord(idx, m);
            Complex inv(1.0);
            for (int k = 0; k < spec.n; ++k) {
                if (k == m) continue;
                inv /= xm - g.coord(idx, k);
            }
            const Complex xz = xm - spec.z[static_cast<std::size_t>(m)];
            out.h(p, p) += xz;
            out.e(p, p) += 2.0 * xz;
            out.h.row(p) -= inv * yminus[static_cast<std::size_t>(m)].row(p);
            out.f.row(p) += inv * yminus[static_cast<std::size_t>(m)].row(p);
            out.e.row(p) -= inv * (yplus[static_cast<std::size_t>(m)].row(p) +
                                   yminus[static_cast<std::size_t>(m)].row(p));
        }
    }
    return out;
}

OpPoly raising_C(const ModelSpec& spec, const SeparationLattice& lattice) {
    if (spec.variant != Variant::Additive)
        throw std::invalid_argument("raising_C: defined for the additive variant only");
    const LatticeGeometry g = geometry(spec, lattice);

    std::vector<CMatrix> yminus, yplus;
    for (int m = 0; m < spec.n; ++m) {
        yplus.push_back(build_yplus(g, m));
        yminus.push_back(build_yminus(g, m));
    }

    const auto big_delta = [&](Complex u) {
        Complex d(1.0);
        for (int m = 0; m < spec.n; ++m) {
            const Complex zm = spec.z[static_cast<std::size_t>(m)];
            const Complex lm = spec.weights[static_cast<std::size_t>(m)].lambda;
            d *= (u - zm + lm) * (u - zm - lm - 1.0);
        }
        return d;
    };

    std::vector<std::vector<CMatrix>> cross(static_cast<std::size_t>(spec.n),
                                            std::vector<CMatrix>(static_cast<std::size_t>(spec.n)));
    for (int m = 0; m < spec.n; ++m)
        for (int l = 0; l < spec.n; ++l)
            if (l != m)
                cross[static_cast<std::size_t>(m)][static_cast<std::size_t>(l)] =
                    yplus[static_cast<std::size_t>(m)] * yminus[static_cast<std::size_t>(l)];

    const auto node_value = [&](Complex u) {
        CMatrix c = CMatrix::Zero(g.dim, g.dim);
        std::vector<int> idx(g.dims.size(), 0);
        for (Index p = 0; p < g.dim; ++p) {
            Index rest = p;
            for (std::size_t k = g.dims.size(); k-- > 0;) {
                idx[k] = static_cast<int>(rest % g.dims[k]);
                rest /= g.dims[k];
            }
            for (int m = 0; m < spec.n; ++m) {
                const Complex xm = g.coord(idx, m);
                Complex lag(1.0);
                for (int k = 0; k < spec.n; ++k) {
                    if (k == m) continue;
                    lag *= (u - g.coord(idx, k)) / (xm - g.coord(idx, k));
                }
                Complex s1 = big_delta(xm + 1.0), s2 = big_delta(xm);
                for (int k = 0; k < spec.n; ++k) {
                    s1 /= xm - g.coord(idx, k) + 1.0;
                    s2 /= xm - g.coord(idx, k) - 1.0;
                }
                c(p, p) += lag * (s1 + s2);
                c.row(p) -= lag * (yplus[static_cast<std::size_t>(m)].row(p) +
                                   yminus[static_cast<std::size_t>(m)].row(p));

                for (int l = 0; l < spec.n; ++l) {
                    if (l == m) continue;
                    const Complex xl = g.coord(idx, l);
                    Complex coef = 1.0 / ((xm - xl) * (xm - xl - 1.0));
                    for (int k = 0; k < spec.n; ++k) {
                        if (k == m || k == l) continue;
                        const Complex xk = g.coord(idx, k);
                        coef *= (u - xk) / ((xm - xk) * (xl - xk));
                    }
                    c.row(p) +=
                        coef *
                        cross[static_cast<std::size_t>(m)][static_cast<std::size_t>(l)].row(p);
                }
            }
        }
        return c;
    };

    const auto nodes = interpolation_nodes(spec, std::max(spec.n, 1));
    std::vector<CMatrix> values;
    values.reserve(nodes.size());
    for (const auto& u : nodes) values.push_back(node_value(u));
    return OpPoly(interpolate_coeffs(nodes, values), g.dim);
}

int count_local_solutions(const ModelSpec& spec, Complex coupling, Rng& rng) {
    const SeparationLattice lattice = build_lattice(spec);
    const SovFamily fam = sov_operators(spec, lattice, coupling);
    const auto pairs = sov_spectrum(spec, lattice, fam, rng);
    std::vector<CPoly> distinct;
    for (const auto& p : pairs) {
        bool fresh = true;
        for (const auto& q : distinct)
            if (poly_distance(p.tau, q) < spec.tol.dedup_tol) {
                fresh = false;
                break;
            }
        if (fresh) distinct.push_back(p.tau);
    }
    return static_cast<int>(distinct.size());
}

}  // namespace tq
