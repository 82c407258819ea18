#include "tq/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace tq {

RankResult matrix_rank(const CMatrix& m, const ToleranceProfile& tol) {
    if (m.size() == 0) return {0, 0.0};
    Eigen::JacobiSVD<CMatrix> svd(m);
    const auto& sv = svd.singularValues();
    RankResult r;
    if (sv.size() == 0 || sv(0) == 0.0) return {0, 0.0};
    const double cut = tol.rank_tol * sv(0);
    for (Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cut) ++r.rank;
    r.condition = r.rank > 0 ? sv(0) / sv(r.rank - 1) : 0.0;
    return r;
}

double commutator_defect(const CMatrix& a, const CMatrix& b) {
    const double den = std::max(a.norm() * b.norm(), 1e-300);
    return (a * b - b * a).norm() / den;
}

namespace {

CMatrix random_real_combination(const std::vector<CMatrix>& family, Rng& rng) {
    CMatrix m = CMatrix::Zero(family.front().rows(), family.front().cols());
    for (const auto& f : family) m += rng.uniform(-1.0, 1.0) * f;
    return m;
}

void check_commuting(const std::vector<CMatrix>& family, const ToleranceProfile& tol) {
    for (std::size_t i = 0; i < family.size(); ++i)
        for (std::size_t j = i + 1; j < family.size(); ++j)
            if (commutator_defect(family[i], family[j]) > tol.residual_tol)
                throw std::invalid_argument("not a commuting family");
}

double spectrum_scale(const CVector& ev) {
    double s = 1.0;
    for (Index i = 0; i < ev.size(); ++i) s = std::max(s, std::abs(ev(i)));
    return s;
}

struct Clusters {
    std::vector<std::vector<Index>> groups;
    std::vector<Complex> centers;
    bool ambiguous = false;  // inter-cluster gaps too close to the merge radius
};

Clusters cluster_eigenvalues(const CVector& ev, double ctol) {
    std::vector<Index> order(static_cast<std::size_t>(ev.size()));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Index>(i);
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
        if (ev(a).real() != ev(b).real()) return ev(a).real() < ev(b).real();
        return ev(a).imag() < ev(b).imag();
    });
    Clusters cl;
    for (Index idx : order) {
        bool placed = false;
        for (std::size_t g = 0; g < cl.groups.size(); ++g) {
            if (std::abs(ev(idx) - cl.centers[g]) < ctol) {
                cl.groups[g].push_back(idx);
                placed = true;
                break;
            }
        }
        if (!placed) {
            cl.groups.push_back({idx});
            cl.centers.push_back(ev(idx));
        }
    }
    for (std::size_t g = 0; g < cl.groups.size(); ++g) {
        Complex mean(0.0);
        for (Index idx : cl.groups[g]) mean += ev(idx);
        cl.centers[g] = mean / double(cl.groups[g].size());
    }
    for (std::size_t g = 0; g < cl.groups.size(); ++g)
        for (std::size_t h = g + 1; h < cl.groups.size(); ++h)
            if (std::abs(cl.centers[g] - cl.centers[h]) < 4.0 * ctol) cl.ambiguous = true;
    return cl;
}

}  // namespace

CommutingDiag commuting_diag(const std::vector<CMatrix>& family, const ToleranceProfile& tol,
                             Rng& rng) {
    if (family.empty()) throw std::invalid_argument("empty family");
    check_commuting(family, tol);
    const Index n = family.front().rows();

    for (int attempt = 0; attempt < 8; ++attempt) {
        const CMatrix m = random_real_combination(family, rng);
        Eigen::ComplexEigenSolver<CMatrix> es(m, /*computeEigenvectors=*/true);
        const CVector ev = es.eigenvalues();
        const double ctol = tol.dedup_tol * spectrum_scale(ev);

        bool collision = false;
        for (Index i = 0; i < n && !collision; ++i)
            for (Index j = i + 1; j < n; ++j)
                if (std::abs(ev(i) - ev(j)) < ctol) {
                    collision = true;
                    break;
                }
        if (collision) continue;

        CommutingDiag out;
        out.eigenvectors = es.eigenvectors();
        for (Index k = 0; k < n; ++k) out.eigenvectors.col(k).normalize();
        out.eigenvalues.resize(family.size());
        for (std::size_t j = 0; j < family.size(); ++j) {
            CVector lam(n);
            for (Index k = 0; k < n; ++k) {
                const CVector x = out.eigenvectors.col(k);
                lam(k) = x.dot(family[j] * x);  // Eigen dot conjugates the left argument
            }
            out.eigenvalues[j] = lam;
        }
        return out;
    }

    // Persistent collisions: the joint spectrum is genuinely degenerate.  A
    // degenerate family may still be diagonalizable (shared eigenspaces of
    // full geometric multiplicity); only a defective one is an error.
    const auto clusters = joint_spectrum(family, tol, rng);
    CommutingDiag out;
    out.eigenvectors = CMatrix::Zero(n, n);
    out.eigenvalues.assign(family.size(), CVector::Zero(n));
    Index col = 0;
    for (const auto& cl : clusters) {
        CMatrix quad = CMatrix::Zero(n, n);
        for (std::size_t j = 0; j < family.size(); ++j) {
            const double w = std::max(family[j].norm(), 1.0);
            const CMatrix r =
                (family[j] -
                 cl.op_eigenvalues(static_cast<Index>(j)) * CMatrix::Identity(n, n)) /
                w;
            quad += r.adjoint() * r;
        }
        Eigen::SelfAdjointEigenSolver<CMatrix> sa(quad);
        const double cut =
            tol.residual_tol * tol.residual_tol * std::max(1.0, sa.eigenvalues()(n - 1));
        Index geometric = 0;
        while (geometric < n && sa.eigenvalues()(geometric) <= cut) ++geometric;
        if (geometric < cl.multiplicity) throw std::runtime_error("degenerate spectrum");
        for (Index k = 0; k < cl.multiplicity; ++k) {
            out.eigenvectors.col(col) = sa.eigenvectors().col(k);
            for (std::size_t j = 0; j < family.size(); ++j)
                out.eigenvalues[j](col) = cl.op_eigenvalues(static_cast<Index>(j));
            ++col;
        }
    }
    return out;
}

std::vector<JointCluster> joint_spectrum(const std::vector<CMatrix>& family,
                                         const ToleranceProfile& tol, Rng& rng) {
    if (family.empty()) throw std::invalid_argument("empty family");
    check_commuting(family, tol);
    const Index n = family.front().rows();

    Clusters cl;
    CMatrix m;
    bool found = false;
    for (int attempt = 0; attempt < 8 && !found; ++attempt) {
        m = random_real_combination(family, rng);
        Eigen::ComplexEigenSolver<CMatrix> es(m, /*computeEigenvectors=*/false);
        const CVector ev = es.eigenvalues();
        cl = cluster_eigenvalues(ev, tol.dedup_tol * spectrum_scale(ev));
        found = !cl.ambiguous;
        if (found) {
            // recompute with vectors unavailable; keep eigenvalues per cluster
            cl.centers.resize(cl.groups.size());
            Complex dummy;
            (void)dummy;
            std::size_t g = 0;
            for (auto& grp : cl.groups) {
                Complex mean(0.0);
                for (Index idx : grp) mean += ev(idx);
                cl.centers[g++] = mean / double(grp.size());
            }
        }
    }
    if (!found) throw std::runtime_error("degenerate spectrum");

    std::vector<JointCluster> out;
    const std::size_t nc = cl.groups.size();
    for (std::size_t g = 0; g < nc; ++g) {
        JointCluster jc;
        jc.multiplicity = static_cast<int>(cl.groups[g].size());

        // Spectral projector of the cluster: Lagrange product over the other
        // clusters raised to their multiplicities.  Exact on commuting
        // families even when the combination matrix is defective.
        CMatrix proj = CMatrix::Identity(n, n);
        for (std::size_t h = 0; h < nc; ++h) {
            if (h == g) continue;
            const Complex denom = cl.centers[g] - cl.centers[h];
            const CMatrix factor = (m - cl.centers[h] * CMatrix::Identity(n, n)) / denom;
            for (std::size_t rep = 0; rep < cl.groups[h].size(); ++rep) proj = proj * factor;
        }

        jc.op_eigenvalues.resize(static_cast<Index>(family.size()));
        for (std::size_t j = 0; j < family.size(); ++j)
            jc.op_eigenvalues(static_cast<Index>(j)) =
                (family[j] * proj).trace() / double(jc.multiplicity);

        // Common eigenvector: minimizer of the stacked residual form.
        CMatrix quad = CMatrix::Zero(n, n);
        for (std::size_t j = 0; j < family.size(); ++j) {
            const double w = std::max(family[j].norm(), 1.0);
            const CMatrix r =
                (family[j] - jc.op_eigenvalues(static_cast<Index>(j)) * CMatrix::Identity(n, n)) /
                w;
            quad += r.adjoint() * r;
        }
        Eigen::SelfAdjointEigenSolver<CMatrix> sa(quad);
        jc.eigenvector = sa.eigenvectors().col(0);
        double res = 0.0;
        for (std::size_t j = 0; j < family.size(); ++j) {
            const double w = std::max(family[j].norm(), 1.0);
            res = std::max(res, ((family[j] * jc.eigenvector) -
                                 jc.op_eigenvalues(static_cast<Index>(j)) * jc.eigenvector)
                                        .norm() /
                                    w);
        }
        jc.eigenvector_residual = res;
        out.push_back(std::move(jc));
    }
    return out;
}

RankOneFactorization rank_one_factor(const CVector& v, const std::vector<int>& dims) {
    Index total = 1;
    for (int d : dims) total *= d;
    if (total != v.size()) throw std::invalid_argument("rank_one_factor: shape mismatch");

    RankOneFactorization out;
    CVector rest = v;
    Index rest_size = total;
    for (std::size_t axis = 0; axis + 1 < dims.size(); ++axis) {
        const Index d = dims[axis];
        const Index tail = rest_size / d;
        CMatrix m(d, tail);
        for (Index i = 0; i < d; ++i)
            for (Index j = 0; j < tail; ++j) m(i, j) = rest(i * tail + j);
        Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        out.factors.push_back(svd.matrixU().col(0));
        rest = svd.singularValues()(0) * svd.matrixV().col(0).conjugate();
        rest_size = tail;
    }
    out.factors.push_back(rest);

    // Relative reconstruction error of the full product.
    CVector recon = out.factors.back();
    for (std::size_t axis = dims.size() - 1; axis-- > 0;) {
        const CVector& a = out.factors[axis];
        CVector next(a.size() * recon.size());
        for (Index i = 0; i < a.size(); ++i)
            for (Index j = 0; j < recon.size(); ++j) next(i * recon.size() + j) = a(i) * recon(j);
        recon = std::move(next);
    }
    out.residual = (recon - v).norm() / std::max(v.norm(), 1e-300);
    return out;
}

}  // namespace tq
