#include "tq/bethe.hpp"

#include <algorithm>
#include <cmath>

namespace tq {

const char* to_string(PathStatus s) {
    switch (s) {
        case PathStatus::Converged: return "Converged";
        case PathStatus::Escaped: return "Escaped";
        case PathStatus::Collided: return "Collided";
        case PathStatus::MaxSteps: return "MaxSteps";
    }
    return "?";
}

namespace {

struct SideProducts {
    Complex lhs, rhs;  // the two products of one Bethe equation
};

SideProducts side_products(const ModelSpec& spec, const std::vector<Complex>& t, std::size_t a) {
    SideProducts p{1.0, 1.0};
    const Complex ta = t[a];
    if (spec.variant == Variant::Additive) {
        for (int m = 0; m < spec.n; ++m) {
            const Complex zm = spec.z[static_cast<std::size_t>(m)];
            const Complex lm = spec.weights[static_cast<std::size_t>(m)].lambda;
            p.lhs *= ta - zm + lm;
            p.rhs *= ta - zm - lm;
        }
        for (std::size_t b = 0; b < t.size(); ++b) {
            if (b == a) continue;
            p.lhs *= ta - t[b] - 1.0;
            p.rhs *= ta - t[b] + 1.0;
        }
    } else {
        const Complex q2 = spec.q * spec.q;
        for (int m = 0; m < spec.n; ++m) {
            const Complex zm = spec.z[static_cast<std::size_t>(m)];
            const Complex q2l = spec.q_two_lambda(m);
            p.lhs *= q2l * ta - zm;
            p.rhs *= ta - q2l * zm;
        }
        for (std::size_t b = 0; b < t.size(); ++b) {
            if (b == a) continue;
            p.lhs *= ta - q2 * t[b];
            p.rhs *= q2 * ta - t[b];
        }
    }
    return p;
}

}  // namespace

CVector bae_residual(const ModelSpec& spec, const std::vector<Complex>& t, Complex kappa) {
    CVector r(static_cast<Index>(t.size()));
    for (std::size_t a = 0; a < t.size(); ++a) {
        const auto p = side_products(spec, t, a);
        r(static_cast<Index>(a)) = p.lhs - kappa * p.rhs;
    }
    return r;
}

double bae_relative_residual(const ModelSpec& spec, const std::vector<Complex>& t, Complex kappa) {
    const double spow =
        std::pow(spec.scale(), double(spec.n) + double(t.size()) - 1.0);
    double worst = 0.0;
    for (std::size_t a = 0; a < t.size(); ++a) {
        const auto p = side_products(spec, t, a);
        const double num = std::abs(p.lhs - kappa * p.rhs);
        const double den = std::abs(p.lhs) + std::abs(kappa * p.rhs) + spow;
        worst = std::max(worst, num / den);
    }
    return worst;
}

CMatrix bae_jacobian(const ModelSpec& spec, const std::vector<Complex>& t, Complex kappa) {
    const std::size_t l = t.size();
    CMatrix j = CMatrix::Zero(static_cast<Index>(l), static_cast<Index>(l));
    const Complex q2 = spec.q * spec.q;

    for (std::size_t a = 0; a < l; ++a) {
        const Complex ta = t[a];
        Complex pzl(1.0), pzr(1.0), dzl(0.0), dzr(0.0);
        for (int m = 0; m < spec.n; ++m) {
            const Complex zm = spec.z[static_cast<std::size_t>(m)];
            Complex fl, fr, gl, gr;  // factor and its t_a-derivative per side
            if (spec.variant == Variant::Additive) {
                const Complex lm = spec.weights[static_cast<std::size_t>(m)].lambda;
                fl = ta - zm + lm;
                fr = ta - zm - lm;
                gl = 1.0;
                gr = 1.0;
            } else {
                const Complex q2l = spec.q_two_lambda(m);
                fl = q2l * ta - zm;
                fr = ta - q2l * zm;
                gl = q2l;
                gr = 1.0;
            }
            dzl = dzl * fl + pzl * gl;
            dzr = dzr * fr + pzr * gr;
            pzl *= fl;
            pzr *= fr;
        }
        Complex ptl(1.0), ptr(1.0), dtl(0.0), dtr(0.0);
        for (std::size_t b = 0; b < l; ++b) {
            if (b == a) continue;
            Complex fl, fr, gl, gr;
            if (spec.variant == Variant::Additive) {
                fl = ta - t[b] - 1.0;
                fr = ta - t[b] + 1.0;
                gl = 1.0;
                gr = 1.0;
            } else {
                fl = ta - q2 * t[b];
                fr = q2 * ta - t[b];
                gl = 1.0;
                gr = q2;
            }
            dtl = dtl * fl + ptl * gl;
            dtr = dtr * fr + ptr * gr;
            ptl *= fl;
            ptr *= fr;
        }
        j(static_cast<Index>(a), static_cast<Index>(a)) =
            dzl * ptl + pzl * dtl - kappa * (dzr * ptr + pzr * dtr);

        for (std::size_t b = 0; b < l; ++b) {
            if (b == a) continue;
            Complex cl(1.0), cr(1.0);
            for (std::size_t c = 0; c < l; ++c) {
                if (c == a || c == b) continue;
                if (spec.variant == Variant::Additive) {
                    cl *= ta - t[c] - 1.0;
                    cr *= ta - t[c] + 1.0;
                } else {
                    cl *= ta - q2 * t[c];
                    cr *= q2 * ta - t[c];
                }
            }
            if (spec.variant == Variant::Additive)
                j(static_cast<Index>(a), static_cast<Index>(b)) = -pzl * cl + kappa * pzr * cr;
            else
                j(static_cast<Index>(a), static_cast<Index>(b)) =
                    -q2 * pzl * cl + kappa * pzr * cr;
        }
    }
    return j;
}

std::vector<std::pair<SeedIndex, std::vector<Complex>>> seeds_kappa0(const ModelSpec& spec,
                                                                     int ell) {
    std::vector<std::pair<SeedIndex, std::vector<Complex>>> out;
    std::vector<int> nu(static_cast<std::size_t>(spec.n), 0);

    const auto emit = [&]() {
        SeedIndex s;
        s.nu = nu;
        s.in_Zlo = true;
        for (int m = 0; m < spec.n; ++m)
            if (nu[static_cast<std::size_t>(m)] > spec.weights[static_cast<std::size_t>(m)].dim() - 1)
                s.in_Zlo = false;
        std::vector<Complex> t;
        t.reserve(static_cast<std::size_t>(ell));
        for (int m = 0; m < spec.n; ++m) {
            const Complex zm = spec.z[static_cast<std::size_t>(m)];
            for (int k = 0; k < nu[static_cast<std::size_t>(m)]; ++k) {
                if (spec.variant == Variant::Additive) {
                    t.push_back(zm - spec.weights[static_cast<std::size_t>(m)].lambda + double(k));
                } else {
                    Complex p = zm / spec.q_two_lambda(m);
                    for (int r = 0; r < k; ++r) p *= spec.q * spec.q;
                    t.push_back(p);
                }
            }
        }
        out.emplace_back(std::move(s), std::move(t));
    };

    // lexicographic enumeration of compositions of ell into n parts
    const auto rec = [&](auto&& self, int m, int rest) -> void {
        if (m == spec.n - 1) {
            nu[static_cast<std::size_t>(m)] = rest;
            emit();
            return;
        }
        for (int k = rest; k >= 0; --k) {
            nu[static_cast<std::size_t>(m)] = k;
            self(self, m + 1, rest - k);
        }
    };
    if (ell == 0) {
        emit();
    } else {
        rec(rec, 0, ell);
    }
    // descending first coordinate gives ascending lexicographic order when
    // reversed; keep plain lexicographic order instead
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.first.nu < b.first.nu; });
    return out;
}

namespace {

bool newton_correct(const ModelSpec& spec, std::vector<Complex>& t, Complex kappa, int max_iter,
                    double target, int* used) {
    const std::size_t l = t.size();
    for (int it = 0; it < max_iter; ++it) {
        if (bae_relative_residual(spec, t, kappa) < target) {
            if (used) *used += it;
            return true;
        }
        const CVector f = bae_residual(spec, t, kappa);
        const CMatrix j = bae_jacobian(spec, t, kappa);
        const CVector dt = j.partialPivLu().solve(f);
        bool finite = true;
        for (std::size_t a = 0; a < l; ++a) {
            const Complex na = t[a] - dt(static_cast<Index>(a));
            if (!std::isfinite(na.real()) || !std::isfinite(na.imag())) finite = false;
            t[a] = na;
        }
        if (!finite) {
            if (used) *used += it + 1;
            return false;
        }
    }
    if (used) *used += max_iter;
    return bae_relative_residual(spec, t, kappa) < target;
}

double jacobian_condition_at(const ModelSpec& spec, const std::vector<Complex>& t, Complex kappa) {
    if (t.empty()) return 1.0;
    const CMatrix j = bae_jacobian(spec, t, kappa);
    Eigen::JacobiSVD<CMatrix> svd(j);
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    if (smin <= 0.0) return std::numeric_limits<double>::infinity();
    return sv(0) / smin;
}

}  // namespace

BetheSolution track_path(const ModelSpec& spec, const SeedIndex& seed,
                         const std::vector<Complex>& t0, Complex kappa_target,
                         const TrackOptions& opts) {
    BetheSolution sol;
    sol.seed = seed;
    sol.ell = static_cast<int>(t0.size());
    sol.kappa = kappa_target;
    sol.t = t0;

    const double scale = spec.scale();
    const double target = spec.tol.residual_tol;

    if (sol.ell == 0) {
        sol.path_status = PathStatus::Converged;
        sol.history.final_s = 1.0;
        classify(spec, sol);
        return sol;
    }

    if (std::abs(kappa_target) == 0.0) {
        // Target is the start system itself; the seed is already exact.
        sol.residual = bae_relative_residual(spec, sol.t, 0.0);
        sol.jacobian_condition = jacobian_condition_at(spec, sol.t, 0.0);
        sol.path_status = PathStatus::Converged;
        sol.history.final_s = 1.0;
        classify(spec, sol);
        return sol;
    }

    double s = std::min(1.0, opts.start_modulus / std::abs(kappa_target));
    if (!newton_correct(spec, sol.t, s * kappa_target, opts.max_newton,
                        target, &sol.history.newton_iterations)) {
        sol.path_status = PathStatus::MaxSteps;
        sol.history.final_s = s;
        classify(spec, sol);
        return sol;
    }

    double ds = std::min(opts.initial_step, 1.0 - s);
    int streak = 0;
    PathStatus status = PathStatus::Converged;

    while (s < 1.0) {
        ds = std::min(ds, 1.0 - s);
        const double s_next = s + ds;

        // Euler predictor: J dt = kappa_target * rhs * ds
        std::vector<Complex> trial = sol.t;
        double predicted_move = 0.0;
        {
            const CMatrix j = bae_jacobian(spec, trial, s * kappa_target);
            CVector rhs(static_cast<Index>(trial.size()));
            for (std::size_t a = 0; a < trial.size(); ++a)
                rhs(static_cast<Index>(a)) = kappa_target * side_products(spec, trial, a).rhs;
            const CVector dt = j.partialPivLu().solve(rhs * ds);
            bool finite = true;
            for (std::size_t a = 0; a < trial.size(); ++a) {
                trial[a] += dt(static_cast<Index>(a));
                if (!std::isfinite(trial[a].real()) || !std::isfinite(trial[a].imag()))
                    finite = false;
            }
            if (!finite)
                trial = sol.t;  // fall back to a plain Newton hop
            else
                predicted_move = dt.norm();
        }

        bool ok = newton_correct(spec, trial, s_next * kappa_target, opts.max_newton,
                                 target, &sol.history.newton_iterations);
        ++sol.history.steps;

        if (ok) {
            // reject corrections that leave the predictor's neighbourhood:
            // those are jumps onto a different solution branch
            double moved = 0.0;
            for (std::size_t a = 0; a < trial.size(); ++a)
                moved += std::norm(trial[a] - sol.t[a]);
            moved = std::sqrt(moved);
            if (moved > 4.0 * predicted_move + 0.002 * scale) ok = false;
        }
        if (ok && s_next < 1.0) {
            // diagonal points solve the same polynomial system; a corrector
            // landing on one mid-path has been captured by the wrong branch
            double ming = std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < trial.size(); ++a)
                for (std::size_t b = a + 1; b < trial.size(); ++b)
                    ming = std::min(ming, std::abs(trial[a] - trial[b]));
            if (ming < spec.tol.dedup_tol * scale) ok = false;
        }

        if (ok) {
            sol.t = trial;
            s = s_next;
            if (++streak >= 3) {
                ds = std::min(2.0 * ds, opts.max_step);
                streak = 0;
            }
            double biggest = 0.0;
            for (const auto& ta : sol.t) biggest = std::max(biggest, std::abs(ta));
            if (biggest > opts.escape_factor * scale) {
                status = PathStatus::Escaped;
                break;
            }
        } else {
            streak = 0;
            ds *= 0.5;
            if (ds < opts.step_floor) {
                status = PathStatus::MaxSteps;
                break;
            }
        }
    }

    sol.history.final_s = s;
    if (status == PathStatus::Converged && s >= 1.0) {
        // best-effort polish to machine precision; the tracked tolerance is
        // looser than what the downstream residue checks appreciate
        std::vector<Complex> refined = sol.t;
        if (newton_correct(spec, refined, kappa_target, 4, 1e-14,
                           &sol.history.newton_iterations))
            sol.t = refined;
        double gap = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < sol.t.size(); ++a)
            for (std::size_t b = a + 1; b < sol.t.size(); ++b)
                gap = std::min(gap, std::abs(sol.t[a] - sol.t[b]));
        if (gap < spec.tol.dedup_tol * scale) status = PathStatus::Collided;
    } else if (status == PathStatus::Converged) {
        status = PathStatus::MaxSteps;
    }

    sol.path_status = status;
    sol.residual = bae_relative_residual(spec, sol.t, s * kappa_target);
    sol.jacobian_condition = jacobian_condition_at(spec, sol.t, s * kappa_target);
    classify(spec, sol);
    return sol;
}

std::vector<Complex> sorted_tuple(const std::vector<Complex>& t) {
    std::vector<Complex> s = t;
    std::sort(s.begin(), s.end(), [](Complex a, Complex b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    return s;
}

void classify(const ModelSpec& spec, BetheSolution& sol) {
    const double scale = spec.scale();
    const double dd = spec.tol.dedup_tol * scale;
    const double mm = spec.tol.margin_tol * scale;
    const std::size_t l = sol.t.size();

    double pair_gap = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < l; ++a)
        for (std::size_t b = a + 1; b < l; ++b)
            pair_gap = std::min(pair_gap, std::abs(sol.t[a] - sol.t[b]));
    sol.offdiagonal = pair_gap > dd;

    // distance to the degeneration variety, measured through its factors
    double margin = std::numeric_limits<double>::infinity();
    const Complex q2 = spec.q * spec.q;
    for (std::size_t a = 0; a < l; ++a) {
        for (int m = 0; m < spec.n; ++m) {
            const Complex zm = spec.z[static_cast<std::size_t>(m)];
            if (spec.variant == Variant::Additive) {
                const Complex lm = spec.weights[static_cast<std::size_t>(m)].lambda;
                margin = std::min(margin, std::abs(sol.t[a] - zm + lm));
                margin = std::min(margin, std::abs(sol.t[a] - zm - lm));
            } else {
                const Complex q2l = spec.q_two_lambda(m);
                margin = std::min(margin, std::abs(q2l * sol.t[a] - zm));
                margin = std::min(margin, std::abs(sol.t[a] - q2l * zm));
            }
        }
        for (std::size_t b = 0; b < l; ++b) {
            if (b == a) continue;
            if (spec.variant == Variant::Additive)
                margin = std::min(margin, std::abs(sol.t[a] - sol.t[b] - 1.0));
            else
                margin = std::min(margin, std::abs(sol.t[a] - q2 * sol.t[b]));
        }
    }
    sol.admissible = margin > mm;

    // full-string detection per factor
    sol.string_detected = -1;
    for (int m = 0; m < spec.n && sol.string_detected < 0; ++m) {
        const Weight& w = spec.weights[static_cast<std::size_t>(m)];
        if (!w.integral) continue;
        const auto pts = spec.factor_points(m);
        bool all = true;
        for (const auto& p : pts) {
            bool found = false;
            for (const auto& ta : sol.t)
                if (std::abs(ta - p) < dd) {
                    found = true;
                    break;
                }
            if (!found) {
                all = false;
                break;
            }
        }
        if (all && !pts.empty()) sol.string_detected = m;
    }

    // canonical key: sorted tuple rounded at dedup granularity
    sol.orbit_key.clear();
    for (const auto& ta : sorted_tuple(sol.t)) {
        const double g = dd > 0 ? dd : 1.0;
        sol.orbit_key.push_back(
            Complex(std::round(ta.real() / g) * g, std::round(ta.imag() / g) * g));
    }
}

std::vector<Orbit> orbit_dedup(const ModelSpec& spec, const std::vector<BetheSolution>& sols) {
    const double dd = spec.tol.dedup_tol * spec.scale();
    std::vector<Orbit> orbits;
    for (std::size_t i = 0; i < sols.size(); ++i) {
        const auto key = sorted_tuple(sols[i].t);
        bool placed = false;
        for (auto& orb : orbits) {
            const auto ref = sorted_tuple(orb.representative.t);
            if (ref.size() != key.size()) continue;
            double dist = 0.0;
            for (std::size_t a = 0; a < key.size(); ++a)
                dist = std::max(dist, std::abs(key[a] - ref[a]));
            if (dist < dd) {
                orb.multiplicity += 1;
                orb.members.push_back(i);
                placed = true;
                break;
            }
        }
        if (!placed) {
            Orbit orb;
            orb.representative = sols[i];
            orb.members = {i};
            orbits.push_back(std::move(orb));
        }
    }
    return orbits;
}

CPoly eigenvalue_tau(const ModelSpec& spec, const std::vector<Complex>& t, Complex kappa) {
    const double dd = spec.tol.dedup_tol * spec.scale();
    for (std::size_t a = 0; a < t.size(); ++a)
        for (std::size_t b = a + 1; b < t.size(); ++b)
            if (std::abs(t[a] - t[b]) <= dd)
                throw std::invalid_argument("eigenvalue_tau: diagonal t");

    CPoly lhs = CPoly::constant(1.0), rhs = CPoly::constant(1.0);
    if (spec.variant == Variant::Additive) {
        for (int m = 0; m < spec.n; ++m) {
            const Complex zm = spec.z[static_cast<std::size_t>(m)];
            const Complex lm = spec.weights[static_cast<std::size_t>(m)].lambda;
            lhs = poly_mul(lhs, CPoly({-zm + lm, 1.0}));
            rhs = poly_mul(rhs, CPoly({-zm - lm, 1.0}));
        }
        for (const auto& ta : t) {
            lhs = poly_mul(lhs, CPoly({-ta - 1.0, 1.0}));
            rhs = poly_mul(rhs, CPoly({-ta + 1.0, 1.0}));
        }
    } else {
        const Complex q2 = spec.q * spec.q;
        for (int m = 0; m < spec.n; ++m) {
            const Complex zm = spec.z[static_cast<std::size_t>(m)];
            const Complex q2l = spec.q_two_lambda(m);
            lhs = poly_mul(lhs, CPoly({-zm, q2l}));
            rhs = poly_mul(rhs, CPoly({-q2l * zm, 1.0}));
        }
        for (const auto& ta : t) {
            lhs = poly_mul(lhs, CPoly({-q2 * ta, 1.0}));
            rhs = poly_mul(rhs, CPoly({-ta, q2}));
        }
    }
    CPoly num = poly_add(lhs, poly_scale(rhs, kappa));
    if (spec.variant == Variant::Multiplicative) {
        // the q^{-Lambda-l} prefactor of the q-deformed eigenvalue
        Complex pref(1.0);
        for (int m = 0; m < spec.n; ++m) pref /= spec.q_lambda(m);
        for (std::size_t a = 0; a < t.size(); ++a) pref /= spec.q;
        num = poly_scale(num, pref);
    }

    // peel off the (u - t_a) factors, small magnitudes first for stable
    // deflation; each remainder is the residue signal
    std::vector<Complex> order = t;
    std::sort(order.begin(), order.end(),
              [](Complex a, Complex b) { return std::abs(a) < std::abs(b); });
    for (const auto& ta : order) {
        Complex rem;
        CPoly quo = poly_deflate(num, ta, &rem);
        double mag = 0.0, pw = 1.0;
        for (const auto& c : num.coeffs) {
            mag += std::abs(c) * pw;
            pw *= std::abs(ta) > 1.0 ? std::abs(ta) : 1.0;
        }
        if (std::abs(rem) > spec.tol.residual_tol * std::max(mag, 1e-300))
            throw std::runtime_error("nonvanishing residue");
        num = std::move(quo);
    }
    return num;
}

}  // namespace tq
