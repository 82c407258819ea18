// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure.  Each criterion re-derives its quantities from the library and
// checks them at the stated tolerance.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "tq/experiment.hpp"

using namespace tq;

namespace {

int g_failures = 0;

void report(const char* name, bool pass, const std::string& detail) {
    std::printf("%s %s — %s\n", name, pass ? "PASS" : "FAIL", detail.c_str());
    if (!pass) ++g_failures;
}

ExperimentConfig config_c1() {
    ExperimentConfig cfg;
    cfg.spec.variant = Variant::Additive;
    cfg.spec.n = 2;
    cfg.spec.weights = {Weight::integral_additive(1), Weight::integral_additive(2)};
    cfg.spec.rng_seed = 20250810;
    cfg.kappa_policy = "generic";
    cfg.experiment = "sweep";
    cfg.workers = 2;
    return cfg;
}

ExperimentConfig config_c5() {
    ExperimentConfig cfg;
    cfg.spec.variant = Variant::Additive;
    cfg.spec.n = 3;
    cfg.spec.weights = {Weight::integral_additive(1), Weight::integral_additive(1),
                        Weight::integral_additive(1)};
    cfg.spec.rng_seed = 505;
    cfg.kappa_policy = "one";
    cfg.experiment = "sweep";
    cfg.workers = 2;
    return cfg;
}

ExperimentConfig config_c8() {
    ExperimentConfig cfg;
    cfg.spec.variant = Variant::Multiplicative;
    cfg.spec.n = 2;
    cfg.spec.q = Complex(1.21);
    cfg.spec.weights = {Weight::integral_multiplicative(1), Weight::integral_multiplicative(2)};
    cfg.spec.z = {Complex(1.0), Complex(3.7)};
    cfg.spec.rng_seed = 808;
    cfg.kappa_policy = "generic";
    cfg.experiment = "sweep";
    cfg.workers = 2;
    return cfg;
}

struct OrbitView {
    std::vector<const SolutionRecord*> reps;  // one counted record per orbit
    std::map<int, std::vector<const SolutionRecord*>> by_ell;
};

OrbitView counted_orbits(const RunReport& rep, bool kappa_one) {
    OrbitView view;
    std::set<int> seen;
    for (const auto& r : rep.records) {
        if (r.path_status != "Converged" || !r.offdiagonal || !r.admissible) continue;
        if (kappa_one && (r.w_rel <= 1e-6 || r.jacobian_condition >= 1e8)) continue;
        if (seen.count(r.orbit_id)) continue;
        seen.insert(r.orbit_id);
        view.reps.push_back(&r);
        view.by_ell[r.ell].push_back(&r);
    }
    return view;
}

bool in_zlo(const SolutionRecord& r, const ModelSpec& spec) {
    for (int m = 0; m < spec.n; ++m)
        if (r.seed_nu[static_cast<std::size_t>(m)] >
            spec.weights[static_cast<std::size_t>(m)].dim() - 1)
            return false;
    return true;
}

}  // namespace

int main() {
    // ---- shared runs -----------------------------------------------------
    const ExperimentConfig cfg1 = config_c1();
    const RunReport run1 = run_experiment(cfg1);
    const ModelSpec spec1 = generate_spec(cfg1.spec, cfg1.kappa_policy);

    const ExperimentConfig cfg5 = config_c5();
    const RunReport run5 = run_experiment(cfg5);
    const ModelSpec spec5 = generate_spec(cfg5.spec, cfg5.kappa_policy);

    const ExperimentConfig cfg8 = config_c8();
    const RunReport run8 = run_experiment(cfg8);
    const ModelSpec spec8 = generate_spec(cfg8.spec, cfg8.kappa_policy);

    // ---- C1: orbit counts, residuals, conditioning at generic coupling ----
    {
        const OrbitView view = counted_orbits(run1, false);
        const std::vector<int> expected = {1, 2, 2, 1};
        bool pass = true;
        std::string detail;
        for (int l = 0; l <= 3; ++l) {
            const int found = view.by_ell.count(l)
                                  ? static_cast<int>(view.by_ell.at(l).size())
                                  : 0;
            if (found != expected[static_cast<std::size_t>(l)]) pass = false;
            detail += "l" + std::to_string(l) + ":" + std::to_string(found) + " ";
        }
        double worst_res = 0.0, worst_cond = 0.0;
        for (const auto& r : run1.records) {
            if (r.path_status != "Converged" || !r.offdiagonal || !r.admissible) continue;
            worst_res = std::max(worst_res, r.residual);
            worst_cond = std::max(worst_cond, r.jacobian_condition);
        }
        pass = pass && worst_res < 1e-9 && worst_cond < 1e8;
        char buf[160];
        std::snprintf(buf, sizeof buf, "counts %stotal %zu, max residual %.1e, max cond %.1e",
                      detail.c_str(), view.reps.size(), worst_res, worst_cond);
        report("C1", pass && view.reps.size() == 6, buf);
    }

    // ---- C2: basis completeness -------------------------------------------
    {
        bool pass = true;
        double worst_cond = 0.0;
        const std::vector<int> expected = {1, 2, 2, 1};
        for (const auto& row : run1.summary) {
            if (row.basis_rank != expected[static_cast<std::size_t>(row.ell)]) pass = false;
            worst_cond = std::max(worst_cond, row.basis_condition);
        }
        pass = pass && worst_cond < 1e6;
        char buf[120];
        std::snprintf(buf, sizeof buf, "ranks full, max condition %.1e", worst_cond);
        report("C2", pass, buf);
    }

    // ---- C3: eigenvalue theorem at 2n+2 sample points ----------------------
    {
        bool pass = true;
        double worst = 0.0;
        int checked = 0;
        for (const RunReport* rep : {&run1, &run8}) {
            for (const auto& r : rep->records) {
                if (r.path_status != "Converged" || !r.offdiagonal || !r.admissible) continue;
                if (r.eigen_residual < 0) {
                    pass = false;
                    continue;
                }
                worst = std::max(worst, r.eigen_residual);
                ++checked;
            }
        }
        pass = pass && worst < 1e-8 && checked >= 12;
        char buf[120];
        std::snprintf(buf, sizeof buf, "%d solutions, max eigen residual %.1e", checked, worst);
        report("C3", pass, buf);
    }

    // ---- C4: orthogonality and the norm determinant ------------------------
    {
        bool pass = true;
        double worst_pair_rel = 0.0, worst_det = 0.0;
        const OrbitView view = counted_orbits(run1, false);
        for (const auto& [l, reps] : view.by_ell) {
            double diag = 0.0;
            for (const auto* r : reps) diag = std::max(diag, std::abs(r->norm_lhs));
            for (const auto* r : reps) {
                if (!r->has_norms) {
                    pass = false;
                    continue;
                }
                worst_det = std::max(worst_det, r->det_rel_err);
                if (reps.size() > 1 && r->offorbit_pairing_max >= 0)
                    worst_pair_rel =
                        std::max(worst_pair_rel, r->offorbit_pairing_max / std::max(diag, 1e-300));
            }
        }
        pass = pass && worst_pair_rel < 1e-8 && worst_det < 1e-6;
        char buf[140];
        std::snprintf(buf, sizeof buf, "max off-orbit pairing %.1e of diag, max det err %.1e",
                      worst_pair_rel, worst_det);
        report("C4", pass, buf);
    }

    // ---- C5: singular sector at kappa = 1 ----------------------------------
    {
        const OrbitView view = counted_orbits(run5, true);
        const std::vector<int> expected = {1, 2, 0, 0};
        bool pass = true;
        std::string counts;
        for (int l = 0; l <= 3; ++l) {
            const int found =
                view.by_ell.count(l) ? static_cast<int>(view.by_ell.at(l).size()) : 0;
            if (found != expected[static_cast<std::size_t>(l)]) pass = false;
            counts += std::to_string(found) + " ";
        }
        // singular-vector membership of every counted vector
        const TensorSpace space = build_space(spec5, 3);
        const MonodromyBundle bundle = monodromy(spec5, space);
        double worst_sing = 0.0;
        for (const auto* r : view.reps) {
            const BetheVector w = bethe_vector_product(space, bundle, r->t);
            worst_sing = std::max(worst_sing, singular_check(space, w, r->ell));
        }
        // full rank inside the singular subspace, from the summary rows
        for (const auto& row : run5.summary)
            if (row.basis_rank != expected[static_cast<std::size_t>(row.ell)]) pass = false;
        pass = pass && worst_sing < 1e-8;
        char buf[140];
        std::snprintf(buf, sizeof buf, "counts %s, max raising defect %.1e", counts.c_str(),
                      worst_sing);
        report("C5", pass, buf);
    }

    // ---- C6: separated spectrum matches the solver sweep -------------------
    {
        const SeparationLattice lat = build_lattice(spec1);
        const SovFamily fam = sov_operators(spec1, lat, spec1.kappa);
        Rng rng = Rng(spec1.rng_seed).child(0x50F);
        const auto pairs = sov_spectrum(spec1, lat, fam, rng);

        const OrbitView view = counted_orbits(run1, false);
        std::vector<CPoly> bethe_taus;
        for (const auto* r : view.reps)
            bethe_taus.push_back(global_from_bethe(spec1, lat, r->t, spec1.kappa).tau);

        bool pass = pairs.size() == 6 && bethe_taus.size() == 6;
        double worst_match = 0.0, worst_rank1 = 0.0;
        std::vector<bool> used(bethe_taus.size(), false);
        for (const auto& p : pairs) {
            worst_rank1 = std::max(worst_rank1, p.factor_residual);
            double best = 1e99;
            std::size_t bi = 0;
            for (std::size_t i = 0; i < bethe_taus.size(); ++i) {
                if (used[i]) continue;
                const double d = poly_distance(p.tau, bethe_taus[i]);
                if (d < best) {
                    best = d;
                    bi = i;
                }
            }
            if (best < 1e-6) {
                used[bi] = true;
                worst_match = std::max(worst_match, best);
            } else {
                pass = false;
            }
            // every per-factor projection is a nonzero function
            for (std::size_t m = 0; m < lat.sets.size(); ++m) {
                double blk = 0.0;
                for (std::size_t i = 0; i < lat.sets[m].size(); ++i)
                    blk = std::max(blk, std::abs(p.q_profile.values[static_cast<std::size_t>(
                                       lat.offsets[m]) + i]));
                if (blk <= 0.0) pass = false;
            }
        }
        pass = pass && worst_rank1 < 1e-6;
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "%zu pairs, bijective match %.1e, max rank-1 residual %.1e", pairs.size(),
                      worst_match, worst_rank1);
        report("C6", pass, buf);
    }

    // ---- C7: structure of the separated function space ---------------------
    {
        ModelSpec spec7 = spec1;
        spec7.kappa = Complex(1.0);
        const SeparationLattice lat = build_lattice(spec7);
        const SovSl2 s = sl2_on_F(spec7, lat);
        const double he = (s.h * s.e - s.e * s.h - s.e).norm() / s.e.norm();
        const double hf = (s.h * s.f - s.f * s.h + s.f).norm() / s.f.norm();
        const double ef = (s.e * s.f - s.f * s.e - 2.0 * s.h).norm() / s.h.norm();

        // H eigenvalue multiplicities match the weight-space dimensions
        const TensorSpace space = build_space(spec7, spec7.total_steps());
        Eigen::ComplexEigenSolver<CMatrix> es(s.h, true);
        bool chars_ok = true;
        Complex lam_total(0.0);
        for (const auto& w : spec7.weights) lam_total += w.lambda;
        for (int l = 0; l < space.levels(); ++l) {
            int count = 0;
            for (Index i = 0; i < es.eigenvalues().size(); ++i)
                if (std::abs(es.eigenvalues()(i) - (lam_total - double(l))) < 1e-7) ++count;
            if (count != static_cast<int>(space.block_dim(l))) chars_ok = false;
        }

        const SovFamily fam = sov_operators(spec7, lat, Complex(1.0));
        const OpPoly cu = raising_C(spec7, lat);
        std::vector<CMatrix> tc = fam.coeffs;
        for (std::size_t k = 0; k < cu.coeffs.size(); ++k) tc[k] += cu.coeffs[k];
        const OpPoly tcp(tc, fam.dim);
        double worst_comm = 0.0;
        for (const Complex u : {Complex(0.4, 0.7), Complex(-1.3, 0.2), Complex(2.1, -0.9)}) {
            const CMatrix m = tcp.eval(u);
            worst_comm = std::max({worst_comm, commutator_defect(m, s.e),
                                   commutator_defect(m, s.f), commutator_defect(m, s.h)});
        }

        // strict weight raising in the H eigenbasis
        const CMatrix x = es.eigenvectors();
        const CMatrix xinv = x.inverse();
        double offblock = 0.0;
        const CMatrix cmat = cu.eval(Complex(0.8, 0.4));
        const CMatrix cw = xinv * cmat * x;
        for (Index i = 0; i < fam.dim; ++i)
            for (Index j = 0; j < fam.dim; ++j)
                if (std::abs(es.eigenvalues()(i) - es.eigenvalues()(j) - 1.0) > 1e-6)
                    offblock = std::max(offblock, std::abs(cw(i, j)));
        const double raising = offblock / cmat.norm();

        // both readings of the bracket normalization, reported without gating
        const CMatrix hc = s.h * cmat - cmat * s.h;
        const double res_c = (hc - cmat).norm() / cmat.norm();
        const double res_h = (hc - s.h).norm() / s.h.norm();

        const bool pass = he < 1e-10 && hf < 1e-10 && ef < 1e-10 && chars_ok &&
                          worst_comm < 1e-8 && raising < 1e-8;
        char buf[220];
        std::snprintf(buf, sizeof buf,
                      "sl2 defects %.1e/%.1e/%.1e, chars %s, [T+C,sl2] %.1e, raising %.1e; "
                      "[H,C]-C %.2e vs [H,C]-H %.2e (reported)",
                      he, hf, ef, chars_ok ? "ok" : "bad", worst_comm, raising, res_c, res_h);
        report("C7", pass, buf);
    }

    // ---- C8: multiplicative counts, coupling, and the origin constraint ----
    {
        const SeparationLattice lat = build_lattice(spec8);
        const SovFamily fam = sov_operators(spec8, lat, spec8.theta);
        Rng rng = Rng(spec8.rng_seed).child(0x50F);
        const auto pairs = sov_spectrum(spec8, lat, fam, rng);

        const OrbitView view = counted_orbits(run8, false);
        std::vector<CPoly> bethe_taus;
        for (const auto* r : view.reps)
            bethe_taus.push_back(global_from_bethe(spec8, lat, r->t, spec8.theta).tau);

        bool pass = pairs.size() == 6 && bethe_taus.size() == 6;
        std::vector<bool> used(bethe_taus.size(), false);
        for (const auto& p : pairs) {
            double best = 1e99;
            std::size_t bi = 0;
            for (std::size_t i = 0; i < bethe_taus.size(); ++i) {
                if (used[i]) continue;
                const double d = poly_distance(p.tau, bethe_taus[i]);
                if (d < best) {
                    best = d;
                    bi = i;
                }
            }
            if (best < 1e-6)
                used[bi] = true;
            else
                pass = false;
        }

        Complex q2lam(1.0);
        for (int m = 0; m < spec8.n; ++m) q2lam *= spec8.q_two_lambda(m);
        const Complex tau0 = (1.0 + q2lam * spec8.theta) * spec8.z[0] * spec8.z[1];
        double worst_tau0 = 0.0;
        for (const auto& p : pairs)
            worst_tau0 = std::max(worst_tau0, std::abs(poly_eval(p.tau, Complex(0.0)) - tau0) /
                                                  std::abs(tau0));
        for (const auto& t : bethe_taus)
            worst_tau0 = std::max(worst_tau0,
                                  std::abs(poly_eval(t, Complex(0.0)) - tau0) / std::abs(tau0));
        int max_degq = 0;
        for (const auto& r : run8.records)
            if (r.deg_q >= 0) max_degq = std::max(max_degq, r.deg_q);
        pass = pass && worst_tau0 < 1e-10 && max_degq <= 3;
        char buf[160];
        std::snprintf(buf, sizeof buf, "%zu pairs, tau(0) err %.1e, max deg Q %d", pairs.size(),
                      worst_tau0, max_degq);
        report("C8", pass, buf);
    }

    // ---- C9: out-of-range seeds produce trivial strings ---------------------
    {
        ExperimentConfig cfg9 = config_c1();
        cfg9.track_out_of_range = true;
        const RunReport run9 = run_experiment(cfg9);

        std::vector<double> admissible_norms;
        for (const auto& r : run9.records)
            if (r.path_status == "Converged" && r.offdiagonal && r.admissible)
                admissible_norms.push_back(r.w_norm);
        std::sort(admissible_norms.begin(), admissible_norms.end());
        const double median = admissible_norms[admissible_norms.size() / 2];

        int examined = 0;
        bool pass = !admissible_norms.empty();
        double worst_ratio = 0.0;
        for (const auto& r : run9.records) {
            if (in_zlo(r, spec1)) continue;
            if (r.path_status != "Converged" || !r.offdiagonal || r.admissible) continue;
            ++examined;
            if (r.string_detected < 0) pass = false;
            worst_ratio = std::max(worst_ratio, r.w_norm / median);
        }
        pass = pass && examined >= 1 && worst_ratio < 1e-6;
        char buf[140];
        std::snprintf(buf, sizeof buf, "%d string endpoints, max |w|/median %.1e", examined,
                      worst_ratio);
        report("C9", pass, buf);
    }

    // ---- C10: formula cross-validation on non-solutions --------------------
    {
        bool pass = true;
        double worst = 0.0, worst_sym = 0.0;
        for (int variant = 0; variant < 2; ++variant) {
            const ModelSpec& spec = variant == 0 ? spec1 : spec8;
            const int lmax = 3;
            const TensorSpace space = build_space(spec, lmax);
            const MonodromyBundle bundle = monodromy(spec, space);
            Rng rng(0xC10 + variant);
            for (int trial = 0; trial < 50; ++trial) {
                const int ell = 1 + static_cast<int>(rng.next() % 3);
                std::vector<Complex> t;
                for (int a = 0; a < ell; ++a) t.push_back(rng.annulus(0.4, 2.2));
                const BetheVector wp = bethe_vector_product(space, bundle, t);
                const BetheVector ws = bethe_vector_sum(spec, space, t);
                worst = std::max(worst, (wp.coords - ws.coords).norm() /
                                            std::max(ws.coords.norm(), 1e-300));
                for (int p = 0; p < 5 && ell > 1; ++p) {
                    std::vector<Complex> tp = t;
                    for (std::size_t a = tp.size(); a-- > 1;)
                        std::swap(tp[a], tp[rng.next() % (a + 1)]);
                    const BetheVector wq = bethe_vector_product(space, bundle, tp);
                    worst_sym = std::max(worst_sym, (wp.coords - wq.coords).norm() /
                                                        std::max(wp.coords.norm(), 1e-300));
                }
            }
        }
        pass = worst < 1e-9 && worst_sym < 1e-9;
        char buf[140];
        std::snprintf(buf, sizeof buf, "product vs sum %.1e, permutation symmetry %.1e", worst,
                      worst_sym);
        report("C10", pass, buf);
    }

    // ---- C11: degree caps across all three runs ----------------------------
    {
        int viol = 0;
        int seen = 0;
        for (const auto& r : run1.records)
            if (r.deg_q >= 0) {
                ++seen;
                if (r.deg_q > 4) ++viol;
            }
        for (const auto& r : run5.records)
            if (r.deg_q >= 0) {
                ++seen;
                if (r.deg_q > 1) ++viol;
            }
        for (const auto& r : run8.records)
            if (r.deg_q >= 0) {
                ++seen;
                if (r.deg_q > 3) ++viol;
            }
        char buf[120];
        std::snprintf(buf, sizeof buf, "%d pairs checked, %d violations", seen, viol);
        report("C11", seen > 0 && viol == 0, buf);
    }

    // ---- C12: determinism across worker counts ------------------------------
    {
        ExperimentConfig a = config_c1();
        a.workers = 1;
        ExperimentConfig b = config_c1();
        b.workers = 8;
        const RunReport ra = run_experiment(a);
        const RunReport rb = run_experiment(b);
        const bool pass = ra.jsonl == rb.jsonl && !ra.jsonl.empty();
        char buf[120];
        std::snprintf(buf, sizeof buf, "%zu bytes, byte-identical: %s", ra.jsonl.size(),
                      pass ? "yes" : "no");
        report("C12", pass, buf);
    }

    if (g_failures == 0) std::printf("all acceptance criteria passed\n");
    return g_failures == 0 ? 0 : 1;
}
