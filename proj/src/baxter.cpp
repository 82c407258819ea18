#include "tq/baxter.hpp"

#include <algorithm>
#include <cmath>

namespace tq {

namespace {

/// The two product coefficients of the difference equation at a point u.
/// Additive: Delta^+(u) = prod (u - z_m + L_m), Delta^-(u) = prod (u - z_m - L_m);
/// multiplicative: prod (q^{2L_m} u - z_m) and prod (u - q^{2L_m} z_m).
void delta_coeffs(const ModelSpec& spec, Complex u, Complex* dp, Complex* dm) {
    Complex p(1.0), m(1.0);
    for (int k = 0; k < spec.n; ++k) {
        const Complex zk = spec.z[static_cast<std::size_t>(k)];
        if (spec.variant == Variant::Additive) {
            const Complex lk = spec.weights[static_cast<std::size_t>(k)].lambda;
            p *= u - zk + lk;
            m *= u - zk - lk;
        } else {
            const Complex q2l = spec.q_two_lambda(k);
            p *= q2l * u - zk;
            m *= u - q2l * zk;
        }
    }
    *dp = p;
    *dm = m;
}

Complex shift_down(const ModelSpec& spec, Complex u) {
    return spec.variant == Variant::Additive ? u - 1.0 : u / (spec.q * spec.q);
}
Complex shift_up(const ModelSpec& spec, Complex u) {
    return spec.variant == Variant::Additive ? u + 1.0 : u * spec.q * spec.q;
}

int find_point(const SeparationLattice& lattice, Complex u, double tol) {
    for (std::size_t i = 0; i < lattice.points.size(); ++i)
        if (std::abs(lattice.points[i] - u) < tol) return static_cast<int>(i);
    return -1;
}

}  // namespace

SeparationLattice build_lattice(const ModelSpec& spec) {
    for (const auto& w : spec.weights)
        if (!w.integral) throw std::invalid_argument("build_lattice: non-integral weights");

    SeparationLattice lat;
    for (int m = 0; m < spec.n; ++m) {
        lat.offsets.push_back(static_cast<int>(lat.points.size()));
        lat.sets.push_back(spec.factor_points(m));
        for (const auto& p : lat.sets.back()) {
            lat.points.push_back(p);
            lat.owner.push_back(m);
        }
    }
    lat.min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < lat.points.size(); ++i)
        for (std::size_t j = i + 1; j < lat.points.size(); ++j)
            if (lat.owner[i] != lat.owner[j])
                lat.min_gap = std::min(lat.min_gap, std::abs(lat.points[i] - lat.points[j]));
    lat.disjoint = lat.min_gap > spec.tol.margin_tol * spec.scale();
    return lat;
}

double baxter_residual(const ModelSpec& spec, const SeparationLattice& lattice,
                       const TauQPair& pair, Complex coupling) {
    const double look = spec.tol.dedup_tol * spec.scale();
    const double spow = std::pow(spec.scale(), spec.n);
    double qmax = 0.0;
    for (const auto& v : pair.q_profile.values) qmax = std::max(qmax, std::abs(v));

    double worst = 0.0;
    for (std::size_t i = 0; i < lattice.points.size(); ++i) {
        const Complex u = lattice.points[i];
        Complex dp, dm;
        delta_coeffs(spec, u, &dp, &dm);
        dm *= coupling;

        const int below = find_point(lattice, shift_down(spec, u), look);
        const int above = find_point(lattice, shift_up(spec, u), look);
        const Complex q_here = pair.q_profile.values[i];
        const Complex q_below = below >= 0 ? pair.q_profile.values[static_cast<std::size_t>(below)]
                                           : Complex(0.0);
        const Complex q_above = above >= 0 ? pair.q_profile.values[static_cast<std::size_t>(above)]
                                           : Complex(0.0);

        const Complex lhs = poly_eval(pair.tau, u) * q_here;
        const Complex rhs = dp * q_below + dm * q_above;
        const double den =
            std::abs(lhs) + std::abs(dp * q_below) + std::abs(dm * q_above) + spow * qmax + 1e-300;
        worst = std::max(worst, std::abs(lhs - rhs) / den);
    }
    return worst;
}

std::optional<QProfile> local_solve_linear(const ModelSpec& spec,
                                           const SeparationLattice& lattice, const CPoly& tau,
                                           Complex coupling) {
    if (tau.degree() > spec.n) throw std::invalid_argument("local_solve_linear: deg tau > n");

    QProfile profile;
    profile.values.assign(lattice.points.size(), Complex(0.0));

    for (int m = 0; m < spec.n; ++m) {
        const auto& pts = lattice.sets[static_cast<std::size_t>(m)];
        const int s = static_cast<int>(pts.size());
        CMatrix block = CMatrix::Zero(s, s);
        for (int i = 0; i < s; ++i) {
            const Complex u = pts[static_cast<std::size_t>(i)];
            Complex dp, dm;
            delta_coeffs(spec, u, &dp, &dm);
            dm *= coupling;
            block(i, i) = poly_eval(tau, u);
            if (i > 0) block(i, i - 1) = -dp;
            if (i + 1 < s) block(i, i + 1) = -dm;
        }
        Eigen::JacobiSVD<CMatrix> svd(block, Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        if (sv(0) <= 0.0 || sv(s - 1) > spec.tol.rank_tol * sv(0)) return std::nullopt;
        CVector kernel = svd.matrixV().col(s - 1);
        for (int i = 0; i < s; ++i)
            profile.values[static_cast<std::size_t>(lattice.offsets[static_cast<std::size_t>(m)] +
                                                     i)] = kernel(i);
    }
    gauge_fix(profile, lattice, spec.tol.margin_tol);
    return profile;
}

TauQPair global_from_bethe(const ModelSpec& spec, const SeparationLattice& lattice,
                           const std::vector<Complex>& t, Complex coupling) {
    BetheSolution probe;
    probe.t = t;
    probe.ell = static_cast<int>(t.size());
    classify(spec, probe);
    if (!probe.offdiagonal || !probe.admissible)
        throw std::invalid_argument("global_from_bethe: inadmissible t");

    TauQPair pair;
    pair.source = TauQSource::Bethe;
    pair.deg_q = static_cast<int>(t.size());
    if (spec.variant == Variant::Additive) {
        pair.tau = eigenvalue_tau(spec, t, coupling);
    } else {
        // kappa = q^{2 l} theta, and the global tau carries q^{Lambda - l}
        // relative to the eigenvalue normalization.
        Complex kappa = coupling;
        for (std::size_t a = 0; a < t.size(); ++a) kappa *= spec.q * spec.q;
        Complex rescale(1.0);
        for (int m = 0; m < spec.n; ++m) rescale *= spec.q_lambda(m);
        for (std::size_t a = 0; a < t.size(); ++a) rescale /= spec.q;
        pair.tau = poly_scale(eigenvalue_tau(spec, t, kappa), rescale);
    }
    pair.q_profile.poly = poly_from_roots(t);
    pair.q_profile.values.reserve(lattice.points.size());
    for (const auto& u : lattice.points)
        pair.q_profile.values.push_back(poly_eval(*pair.q_profile.poly, u));
    return pair;
}

void gauge_fix(QProfile& profile, const SeparationLattice& lattice, double margin) {
    for (std::size_t m = 0; m < lattice.sets.size(); ++m) {
        const int off = lattice.offsets[m];
        const int s = static_cast<int>(lattice.sets[m].size());
        double top = 0.0;
        for (int i = 0; i < s; ++i)
            top = std::max(top, std::abs(profile.values[static_cast<std::size_t>(off + i)]));
        if (top == 0.0) continue;
        Complex pivot(0.0);
        for (int i = 0; i < s; ++i) {
            const Complex v = profile.values[static_cast<std::size_t>(off + i)];
            if (std::abs(v) > margin * top) {
                pivot = v;
                break;
            }
        }
        if (std::abs(pivot) == 0.0) continue;
        for (int i = 0; i < s; ++i) profile.values[static_cast<std::size_t>(off + i)] /= pivot;
    }
}

double profile_mismatch(const QProfile& a, const QProfile& b, const SeparationLattice& lattice) {
    double worst = 0.0;
    for (std::size_t m = 0; m < lattice.sets.size(); ++m) {
        const int off = lattice.offsets[m];
        const int s = static_cast<int>(lattice.sets[m].size());
        // align the pseudoconstant on the largest entry of a
        int pivot = off;
        double best = 0.0;
        for (int i = 0; i < s; ++i) {
            const double mag = std::abs(a.values[static_cast<std::size_t>(off + i)]);
            if (mag > best) {
                best = mag;
                pivot = off + i;
            }
        }
        const Complex va = a.values[static_cast<std::size_t>(pivot)];
        const Complex vb = b.values[static_cast<std::size_t>(pivot)];
        if (std::abs(va) == 0.0 || std::abs(vb) == 0.0)
            return std::numeric_limits<double>::infinity();
        const Complex c = va / vb;
        double scale_block = 0.0;
        for (int i = 0; i < s; ++i)
            scale_block =
                std::max(scale_block, std::abs(a.values[static_cast<std::size_t>(off + i)]));
        for (int i = 0; i < s; ++i) {
            const Complex diff = a.values[static_cast<std::size_t>(off + i)] -
                                 c * b.values[static_cast<std::size_t>(off + i)];
            worst = std::max(worst, std::abs(diff) / std::max(scale_block, 1e-300));
        }
    }
    return worst;
}

}  // namespace tq
