#include "tq/experiment.hpp"

#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace tq {

using njson = nlohmann::ordered_json;

std::string version() { return "tqsolve 0.1.0"; }

namespace {

// Verification gates; these mirror the acceptance thresholds and are fixed
// here rather than configurable.
constexpr double kResidualGate = 1e-9;
constexpr double kJCondGate = 1e8;
constexpr double kEigenGate = 1e-8;
constexpr double kPairingGate = 1e-8;
constexpr double kDetRelGate = 1e-6;
constexpr double kBasisCondGate = 1e6;
constexpr double kBaxterGate = 1e-9;
constexpr double kTauMatchGate = 1e-6;
constexpr double kRankOneGate = 1e-6;
constexpr double kTauZeroGate = 1e-10;
constexpr double kTrivialWRel = 1e-6;

njson complex_json(Complex c) { return njson::array({c.real(), c.imag()}); }

njson tuple_json(const std::vector<Complex>& t) {
    njson arr = njson::array();
    for (const auto& c : t) arr.push_back(complex_json(c));
    return arr;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

bool is_sov_experiment(const std::string& e) { return e == "sovcheck" || e == "sweep"; }
bool is_ortho_experiment(const std::string& e) { return e == "ortho" || e == "sweep"; }
bool is_baxter_experiment(const std::string& e) {
    return e == "baxter" || e == "qbaxter" || e == "sweep";
}
bool is_basis_experiment(const std::string& e) {
    return e == "basis" || e == "ortho" || e == "sovcheck" || e == "sweep";
}

}  // namespace

void ExperimentConfig::validate() const {
    static const char* names[] = {"bethe", "basis", "ortho", "baxter",
                                  "qbaxter", "sovcheck", "sweep"};
    bool ok = false;
    for (const char* n : names) ok = ok || experiment == n;
    if (!ok) throw std::invalid_argument("unknown experiment: " + experiment);
    if (workers < 1) throw std::invalid_argument("workers must be positive");
    if (kappa_policy != "explicit" && kappa_policy != "generic" && kappa_policy != "one")
        throw std::invalid_argument("unknown kappa policy: " + kappa_policy);
    if (experiment == "qbaxter" && spec.variant != Variant::Multiplicative)
        throw std::invalid_argument("qbaxter requires the multiplicative variant");
    if (experiment == "baxter" && spec.variant != Variant::Additive)
        throw std::invalid_argument("baxter requires the additive variant");
}

ModelSpec generate_spec(const ModelSpec& base, const std::string& kappa_policy) {
    ModelSpec out = base;
    Rng rng = Rng(base.rng_seed).child(0xA11CE);
    if (out.variant == Variant::Multiplicative && out.q == Complex(1.0))
        out.q = Complex(rng.uniform(1.1, 1.5));
    const bool draw_z = out.z.empty();
    const double gap_factor = 10.0;

    for (int attempt = 0;; ++attempt) {
        if (attempt >= 100) throw std::runtime_error("generate_spec: retry exhaustion");
        if (draw_z) {
            out.z.clear();
            for (int m = 0; m < out.n; ++m) {
                if (out.variant == Variant::Additive)
                    out.z.push_back(rng.annulus(0.7, 2.2 + 0.5 * out.n));
                else
                    out.z.push_back(rng.annulus(0.7, 3.0));
            }
        }
        // all lattice points pairwise separated, including against the
        // one-step shifts of points from other factors
        std::vector<Complex> pts;
        std::vector<int> owner;
        for (int m = 0; m < out.n; ++m)
            for (const auto& p : out.factor_points(m)) {
                pts.push_back(p);
                owner.push_back(m);
            }
        const double need = gap_factor * out.tol.margin_tol * out.scale();
        bool ok = true;
        for (std::size_t i = 0; i < pts.size() && ok; ++i)
            for (std::size_t j = 0; j < pts.size() && ok; ++j) {
                if (i == j) continue;
                if (std::abs(pts[i] - pts[j]) < need && i < j) ok = false;
                if (owner[i] != owner[j]) {
                    if (out.variant == Variant::Additive) {
                        if (std::abs(pts[i] - pts[j] - 1.0) < need) ok = false;
                    } else {
                        if (std::abs(pts[i] - out.q * out.q * pts[j]) < need) ok = false;
                    }
                }
            }
        if (ok) break;
        if (!draw_z) break;  // caller-provided z is kept; separation is only flagged
    }

    if (kappa_policy == "one") {
        out.kappa = Complex(1.0);
    } else if (kappa_policy == "generic") {
        Rng krng = Rng(base.rng_seed).child(0xCAFE);
        for (int attempt = 0;; ++attempt) {
            if (attempt >= 100) throw std::runtime_error("generate_spec: retry exhaustion");
            const Complex cand = krng.annulus(0.3, 3.0);
            if (out.variant == Variant::Additive) {
                if (std::abs(cand - 1.0) < 0.05) continue;
                out.kappa = cand;
                break;
            }
            // reject theta whose per-level coupling hits the exceptional set
            Complex q2lam(1.0);
            for (int m = 0; m < out.n; ++m) q2lam *= out.q_two_lambda(m);
            const int lsum = out.total_steps();
            bool bad = false;
            for (int l = 0; l <= lsum && !bad; ++l) {
                Complex kap = cand;
                for (int r = 0; r < l; ++r) kap *= out.q * out.q;
                if (std::abs(kap - 1.0) < 0.05) bad = true;
                for (int s = 1; s <= l && !bad; ++s) {
                    Complex exc = q2lam;
                    for (int r = 0; r < s; ++r) exc *= out.q * out.q;
                    for (int r = 0; r < l; ++r) exc /= out.q * out.q;
                    if (std::abs(kap - exc) < 0.05) bad = true;
                }
            }
            if (bad) continue;
            out.theta = cand;
            break;
        }
    }
    return out;
}

namespace {

struct RunContext {
    const ExperimentConfig* cfg;
    ModelSpec spec;
    TensorSpace space;
    MonodromyBundle bundle;
    SeparationLattice lattice;
    bool has_lattice = false;
    bool kappa_one = false;
    int eigen_samples = 8;

    Complex coupling_at(int ell) const {
        if (spec.variant == Variant::Additive) return spec.kappa;
        Complex k = spec.theta;
        for (int r = 0; r < ell; ++r) k *= spec.q * spec.q;
        return k;
    }
};

struct TaskInput {
    int ell;
    SeedIndex seed;
    std::vector<Complex> t0;
};

struct TaskResult {
    SolutionRecord rec;
    BetheSolution sol;
    CVector wcoords;
};

double relative_vector_norm(const RunContext& ctx, const std::vector<Complex>& t, double wnorm) {
    double den = 1.0;
    for (const auto& ta : t) den *= std::max(1.0, ctx.bundle.B.eval(ta).norm());
    return wnorm / den;
}

TaskResult compute_task(const RunContext& ctx, const TaskInput& task) {
    const ModelSpec& spec = ctx.spec;
    const Complex kappa = ctx.coupling_at(task.ell);

    TaskResult out;
    out.sol = track_path(spec, task.seed, task.t0, kappa);
    const BetheSolution& sol = out.sol;

    SolutionRecord& r = out.rec;
    r.experiment = ctx.cfg->experiment;
    r.ell = task.ell;
    r.seed_nu = task.seed.nu;
    r.t = sol.t;
    r.residual = sol.residual;
    r.admissible = sol.admissible;
    r.offdiagonal = sol.offdiagonal;
    r.string_detected = sol.string_detected;
    r.path_status = to_string(sol.path_status);
    r.jacobian_condition = sol.jacobian_condition;

    const BetheVector w = bethe_vector_product(ctx.space, ctx.bundle, sol.t);
    out.wcoords = w.coords;
    r.w_norm = w.coords.norm();
    r.w_rel = relative_vector_norm(ctx, sol.t, r.w_norm);

    const bool solved = sol.path_status == PathStatus::Converged && sol.offdiagonal &&
                        sol.residual < 1e-6;
    if (solved) {
        try {
            const CPoly tau = eigenvalue_tau(spec, sol.t, kappa);
            r.tau_coeffs = tau.coeffs;
            const EigenCheck ec =
                eigen_residual(spec, ctx.space, ctx.bundle, kappa, sol.t, tau, ctx.eigen_samples);
            if (!ec.trivial) r.eigen_residual = ec.residual;
        } catch (const std::exception&) {
            // residue failure is reported through the missing tau fields
        }
    }

    if (solved && sol.admissible && is_ortho_experiment(ctx.cfg->experiment)) {
        r.norm_lhs = dual_pairing(ctx.space, ctx.bundle, sol.t, sol.t);
        r.norm_rhs = norm_determinant(spec, sol.t, kappa);
        r.has_norms = true;
        const double den = std::max(std::abs(r.norm_rhs), 1e-300);
        r.det_rel_err = std::abs(r.norm_lhs - r.norm_rhs) / den;
    }

    if (solved && sol.admissible && ctx.has_lattice &&
        is_baxter_experiment(ctx.cfg->experiment)) {
        try {
            const Complex coupling =
                spec.variant == Variant::Additive ? spec.kappa : spec.theta;
            const TauQPair pair = global_from_bethe(spec, ctx.lattice, sol.t, coupling);
            r.deg_q = pair.deg_q;
            r.baxter_resid = baxter_residual(spec, ctx.lattice, pair, coupling);
        } catch (const std::exception&) {
        }
    }
    return out;
}

njson record_json(const SolutionRecord& r) {
    njson j;
    j["experiment"] = r.experiment;
    j["ell"] = r.ell;
    j["seed_nu"] = r.seed_nu;
    j["t"] = tuple_json(r.t);
    j["residual"] = r.residual;
    j["admissible"] = r.admissible;
    j["offdiagonal"] = r.offdiagonal;
    if (r.string_detected >= 0)
        j["string_detected"] = r.string_detected + 1;
    else
        j["string_detected"] = nullptr;
    j["orbit_id"] = r.orbit_id;
    j["path_status"] = r.path_status;
    if (!r.tau_coeffs.empty())
        j["tau_coeffs"] = tuple_json(r.tau_coeffs);
    else
        j["tau_coeffs"] = nullptr;
    if (r.eigen_residual >= 0.0)
        j["eigen_residual"] = r.eigen_residual;
    else
        j["eigen_residual"] = nullptr;
    if (r.has_norms) {
        j["norm_lhs"] = complex_json(r.norm_lhs);
        j["norm_rhs"] = complex_json(r.norm_rhs);
        j["det_rel_err"] = r.det_rel_err;
    } else {
        j["norm_lhs"] = nullptr;
        j["norm_rhs"] = nullptr;
        j["det_rel_err"] = nullptr;
    }
    if (r.offorbit_pairing_max >= 0.0)
        j["offorbit_pairing_max"] = r.offorbit_pairing_max;
    else
        j["offorbit_pairing_max"] = nullptr;
    j["w_norm"] = r.w_norm;
    if (r.deg_q >= 0)
        j["deg_Q"] = r.deg_q;
    else
        j["deg_Q"] = nullptr;
    if (r.baxter_resid >= 0.0)
        j["baxter_residual"] = r.baxter_resid;
    else
        j["baxter_residual"] = nullptr;
    j["jacobian_condition"] = r.jacobian_condition;
    j["w_rel"] = r.w_rel;
    return j;
}

struct SovOutcome {
    bool ran = false;
    bool skipped_partial = false;
    int distinct_tau = 0;
    int expected = 0;
    double max_tau_match = 0.0;
    double max_rank_one = 0.0;
    double max_tau_zero_err = 0.0;
    bool bijective = false;
    std::vector<TauQPair> pairs;
};

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg_in) {
    const auto t_start = std::chrono::steady_clock::now();
    ExperimentConfig cfg = cfg_in;
    cfg.validate();

    if (cfg.spec.z.empty() || cfg.kappa_policy != "explicit")
        cfg.spec = generate_spec(cfg.spec, cfg.kappa_policy);
    cfg.spec.validate();

    RunContext ctx;
    ctx.cfg = &cfg;
    ctx.spec = cfg.spec;
    ctx.kappa_one = cfg.kappa_policy == "one" ||
                    (ctx.spec.variant == Variant::Additive &&
                     std::abs(ctx.spec.kappa - Complex(1.0)) == 0.0);
    ctx.eigen_samples = cfg.eigen_samples > 0 ? cfg.eigen_samples : 2 * ctx.spec.n + 2;

    const int lmax_total = ctx.spec.total_steps();
    std::vector<int> ells = cfg.ell_list;
    if (ells.empty())
        for (int l = 0; l <= lmax_total; ++l) ells.push_back(l);
    std::sort(ells.begin(), ells.end());
    ells.erase(std::unique(ells.begin(), ells.end()), ells.end());
    for (int l : ells)
        if (l < 0 || l > lmax_total) throw std::invalid_argument("ell out of range");
    const bool full_sweep = static_cast<int>(ells.size()) == lmax_total + 1;

    ctx.space = build_space(ctx.spec, ells.back());
    ctx.bundle = monodromy(ctx.spec, ctx.space);
    bool integral = true;
    for (const auto& w : ctx.spec.weights) integral = integral && w.integral;
    if (integral) {
        ctx.lattice = build_lattice(ctx.spec);
        ctx.has_lattice = true;
    }

    std::vector<TaskInput> tasks;
    for (int l : ells)
        for (auto& [seed, t0] : seeds_kappa0(ctx.spec, l)) {
            if (!seed.in_Zlo && !cfg.track_out_of_range) continue;
            tasks.push_back({l, seed, t0});
        }

    // Track all paths; when a generic-coupling run hits the exceptional set
    // (paths escaping or stalling), rotate the target's phase slightly and
    // rerun, as the continuation is only guaranteed off a measure-zero set.
    std::vector<TaskResult> results(tasks.size());
    int perturb_attempts = 0;
    double perturb_sign = 1.0;
    Rng perturb_rng = Rng(ctx.spec.rng_seed).child(0xFA2E);
    for (;;) {
        std::atomic<std::size_t> cursor{0};
        const int nw = std::max(1, cfg.workers);
        std::vector<std::thread> pool;
        auto worker = [&]() {
            for (;;) {
                const std::size_t i = cursor.fetch_add(1);
                if (i >= tasks.size()) return;
                results[i] = compute_task(ctx, tasks[i]);
            }
        };
        for (int wkr = 1; wkr < nw; ++wkr) pool.emplace_back(worker);
        worker();
        for (auto& th : pool) th.join();

        if (ctx.kappa_one) break;
        bool any_failed = false;
        for (std::size_t i = 0; i < tasks.size(); ++i)
            if (tasks[i].seed.in_Zlo &&
                results[i].sol.path_status != PathStatus::Converged)
                any_failed = true;
        // two distinct seeds landing on one orbit also signals an
        // exceptional-segment crossing
        const double dd = ctx.spec.tol.dedup_tol * ctx.spec.scale();
        for (std::size_t i = 0; i < tasks.size() && !any_failed; ++i) {
            if (!tasks[i].seed.in_Zlo ||
                results[i].sol.path_status != PathStatus::Converged)
                continue;
            const auto ti = sorted_tuple(results[i].sol.t);
            for (std::size_t j = i + 1; j < tasks.size() && !any_failed; ++j) {
                if (tasks[j].ell != tasks[i].ell || !tasks[j].seed.in_Zlo ||
                    results[j].sol.path_status != PathStatus::Converged)
                    continue;
                const auto tj = sorted_tuple(results[j].sol.t);
                double dist = 0.0;
                for (std::size_t a = 0; a < ti.size(); ++a)
                    dist = std::max(dist, std::abs(ti[a] - tj[a]));
                if (dist < dd) any_failed = true;
            }
        }
        if (!any_failed || perturb_attempts >= 6) break;
        if (perturb_attempts == 0)
            perturb_sign = perturb_rng.uniform() < 0.5 ? -1.0 : 1.0;
        ++perturb_attempts;
        const double delta = perturb_sign * 1e-2 * (0.5 + perturb_rng.uniform());
        const Complex rot(std::cos(delta), std::sin(delta));
        if (ctx.spec.variant == Variant::Additive)
            ctx.spec.kappa *= rot;
        else
            ctx.spec.theta *= rot;
    }

    RunReport report;
    std::vector<std::string>& failures = report.failures;
    int orbit_counter = 0;
    int nongeneric_collisions = 0;

    const auto counted = [&](const SolutionRecord& r) {
        if (r.path_status != "Converged" || !r.offdiagonal || !r.admissible) return false;
        if (ctx.kappa_one)
            return r.w_rel > kTrivialWRel && r.jacobian_condition < kJCondGate;
        return true;
    };

    struct OrbitRef {
        int ell;
        std::size_t first;  // index into results
    };
    std::vector<OrbitRef> counted_orbits;

    for (int l : ells) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < tasks.size(); ++i)
            if (tasks[i].ell == l) idx.push_back(i);

        LevelSummary row;
        row.ell = l;
        row.expected_dim = (ctx.kappa_one && ctx.spec.variant == Variant::Additive)
                               ? sing_dim(ctx.space, l, ctx.spec.tol)
                               : static_cast<int>(ctx.space.block_dim(l));

        std::vector<BetheSolution> sols;
        for (std::size_t i : idx) sols.push_back(results[i].sol);
        const auto orbits = orbit_dedup(ctx.spec, sols);
        for (const auto& orb : orbits) {
            const int id = orbit_counter++;
            for (std::size_t m : orb.members) results[idx[m]].rec.orbit_id = id;
            if (orb.multiplicity > 1) {
                bool in_range = true;
                for (std::size_t m : orb.members)
                    in_range = in_range && results[idx[m]].sol.seed.in_Zlo;
                if (in_range &&
                    results[idx[orb.members.front()]].sol.path_status == PathStatus::Converged)
                    ++nongeneric_collisions;
            }
        }

        std::vector<std::size_t> reps;  // counted orbit representatives
        for (const auto& orb : orbits) {
            const std::size_t first = idx[orb.members.front()];
            if (counted(results[first].rec)) {
                reps.push_back(first);
                counted_orbits.push_back({l, first});
            }
        }
        row.found_orbits = static_cast<int>(reps.size());

        for (std::size_t i : reps) {
            const SolutionRecord& r = results[i].rec;
            row.max_residual = std::max(row.max_residual, r.residual);
            if (r.eigen_residual >= 0)
                row.max_eigen_residual = std::max(row.max_eigen_residual, r.eigen_residual);
            if (r.det_rel_err >= 0)
                row.max_det_rel_err = std::max(row.max_det_rel_err, r.det_rel_err);
        }

        // orthogonality across counted orbits of this level
        if (is_ortho_experiment(cfg.experiment) && reps.size() > 1) {
            double diag_scale = 0.0;
            for (std::size_t i : reps)
                diag_scale = std::max(diag_scale, std::abs(results[i].rec.norm_lhs));
            for (std::size_t a = 0; a < reps.size(); ++a) {
                double worst = 0.0;
                for (std::size_t b = 0; b < reps.size(); ++b) {
                    if (a == b) continue;
                    const Complex p = dual_pairing(ctx.space, ctx.bundle, results[reps[a]].sol.t,
                                                   results[reps[b]].sol.t);
                    worst = std::max(worst, std::abs(p));
                }
                results[reps[a]].rec.offorbit_pairing_max = worst;
                if (worst > kPairingGate * std::max(diag_scale, 1e-300))
                    failures.push_back("orthogonality defect at ell " + std::to_string(l));
            }
        }

        // basis rank of the counted vectors
        if (is_basis_experiment(cfg.experiment) && !reps.empty()) {
            if (ctx.kappa_one && ctx.spec.variant == Variant::Additive) {
                const CMatrix proj = singular_projector(ctx.space, l);
                CMatrix kernel;
                if (proj.rows() == 0) {
                    kernel = CMatrix::Identity(ctx.space.block_dim(l), ctx.space.block_dim(l));
                } else {
                    Eigen::JacobiSVD<CMatrix> svd(proj, Eigen::ComputeFullV);
                    const int rank = matrix_rank(proj, ctx.spec.tol).rank;
                    kernel = svd.matrixV().rightCols(proj.cols() - rank);
                }
                CMatrix stack(kernel.cols(), static_cast<Index>(reps.size()));
                for (std::size_t k = 0; k < reps.size(); ++k)
                    stack.col(static_cast<Index>(k)) = kernel.adjoint() * results[reps[k]].wcoords;
                const RankResult rr = matrix_rank(stack, ctx.spec.tol);
                row.basis_rank = rr.rank;
                row.basis_condition = rr.condition;
            } else {
                CMatrix stack(ctx.space.block_dim(l), static_cast<Index>(reps.size()));
                for (std::size_t k = 0; k < reps.size(); ++k)
                    stack.col(static_cast<Index>(k)) = results[reps[k]].wcoords;
                const RankResult rr = matrix_rank(stack, ctx.spec.tol);
                row.basis_rank = rr.rank;
                row.basis_condition = rr.condition;
            }
            if (row.basis_rank != std::min<int>(row.expected_dim, static_cast<int>(reps.size())))
                failures.push_back("basis rank deficiency at ell " + std::to_string(l));
            if (row.basis_condition > kBasisCondGate)
                failures.push_back("basis condition at ell " + std::to_string(l));

            if (ctx.kappa_one && ctx.spec.variant == Variant::Additive) {
                for (std::size_t i : reps) {
                    BetheVector w;
                    w.coords = results[i].wcoords;
                    if (singular_check(ctx.space, w, l) > kEigenGate)
                        failures.push_back("singular-vector defect at ell " + std::to_string(l));
                }
            }
        }

        if (row.found_orbits != row.expected_dim)
            failures.push_back("orbit count at ell " + std::to_string(l) + ": found " +
                               std::to_string(row.found_orbits) + ", expected " +
                               std::to_string(row.expected_dim));

        for (std::size_t i : reps) {
            const SolutionRecord& r = results[i].rec;
            if (r.residual > kResidualGate)
                failures.push_back("solution residual at ell " + std::to_string(l));
            if (!ctx.kappa_one && r.jacobian_condition > kJCondGate)
                failures.push_back("jacobian condition at ell " + std::to_string(l));
            if (r.eigen_residual > kEigenGate)
                failures.push_back("eigenvalue residual at ell " + std::to_string(l));
            if (r.det_rel_err > kDetRelGate)
                failures.push_back("norm determinant mismatch at ell " + std::to_string(l));
            if (r.baxter_resid > kBaxterGate)
                failures.push_back("difference-equation residual at ell " + std::to_string(l));
            if (r.deg_q >= 0) {
                int cap;
                if (ctx.spec.variant == Variant::Multiplicative)
                    cap = ctx.spec.total_steps();
                else if (ctx.kappa_one)
                    cap = ctx.spec.total_steps() / 2;
                else
                    cap = ctx.spec.total_steps();
                if (r.deg_q > cap)
                    failures.push_back("deg Q cap violated at ell " + std::to_string(l));
            }
        }
        report.summary.push_back(row);
    }

    // separated-variables spectrum and the tau bijection
    SovOutcome sov;
    if (is_sov_experiment(cfg.experiment) && ctx.has_lattice) {
        if (!full_sweep) {
            sov.skipped_partial = true;
        } else {
            sov.ran = true;
            const Complex coupling =
                ctx.spec.variant == Variant::Additive ? ctx.spec.kappa : ctx.spec.theta;
            const SovFamily fam = sov_operators(ctx.spec, ctx.lattice, coupling);
            Rng srng = Rng(ctx.spec.rng_seed).child(0x50F);
            sov.pairs = sov_spectrum(ctx.spec, ctx.lattice, fam, srng);

            std::vector<CPoly> distinct;
            for (const auto& p : sov.pairs) {
                bool fresh = true;
                for (const auto& q : distinct)
                    if (poly_distance(p.tau, q) < ctx.spec.tol.dedup_tol) fresh = false;
                if (fresh) distinct.push_back(p.tau);
                sov.max_rank_one = std::max(sov.max_rank_one, p.factor_residual);
            }
            sov.distinct_tau = static_cast<int>(distinct.size());
            if (ctx.kappa_one && ctx.spec.variant == Variant::Additive) {
                sov.expected = 0;
                for (int l = 0; l <= lmax_total; ++l)
                    sov.expected += sing_dim(ctx.space, l, ctx.spec.tol);
            } else {
                sov.expected = static_cast<int>(ctx.space.dim);
            }
            if (sov.distinct_tau != sov.expected)
                failures.push_back("separated spectrum count: found " +
                                   std::to_string(sov.distinct_tau) + ", expected " +
                                   std::to_string(sov.expected));
            if (sov.max_rank_one > kRankOneGate)
                failures.push_back("eigenvector factorization residual");
            for (const auto& p : sov.pairs) {
                for (std::size_t m = 0; m < ctx.lattice.sets.size(); ++m) {
                    double blk = 0.0;
                    for (std::size_t i = 0; i < ctx.lattice.sets[m].size(); ++i)
                        blk = std::max(
                            blk,
                            std::abs(p.q_profile.values[static_cast<std::size_t>(
                                ctx.lattice.offsets[m]) + i]));
                    if (blk <= 0.0)
                        failures.push_back("vanishing separated factor");
                }
            }

            // Bethe-sourced tau list from the counted orbits
            std::vector<CPoly> bethe_taus;
            for (const auto& ref : counted_orbits) {
                const auto& sol = results[ref.first].sol;
                try {
                    const TauQPair bp =
                        global_from_bethe(ctx.spec, ctx.lattice, sol.t, coupling);
                    bethe_taus.push_back(bp.tau);
                    if (ctx.spec.variant == Variant::Multiplicative) {
                        Complex q2lam(1.0);
                        for (int m = 0; m < ctx.spec.n; ++m) q2lam *= ctx.spec.q_two_lambda(m);
                        Complex t0_expect = (1.0 + q2lam * ctx.spec.theta);
                        for (const auto& zm : ctx.spec.z) t0_expect *= -zm;
                        const double err = std::abs(poly_eval(bp.tau, Complex(0.0)) - t0_expect) /
                                           std::max(std::abs(t0_expect), 1e-300);
                        sov.max_tau_zero_err = std::max(sov.max_tau_zero_err, err);
                    }
                } catch (const std::exception&) {
                    failures.push_back("global pair construction failed");
                }
            }
            if (ctx.spec.variant == Variant::Multiplicative) {
                for (const auto& p : sov.pairs) {
                    Complex q2lam(1.0);
                    for (int m = 0; m < ctx.spec.n; ++m) q2lam *= ctx.spec.q_two_lambda(m);
                    Complex t0_expect = (1.0 + q2lam * ctx.spec.theta);
                    for (const auto& zm : ctx.spec.z) t0_expect *= -zm;
                    const double err = std::abs(poly_eval(p.tau, Complex(0.0)) - t0_expect) /
                                       std::max(std::abs(t0_expect), 1e-300);
                    sov.max_tau_zero_err = std::max(sov.max_tau_zero_err, err);
                }
                if (sov.max_tau_zero_err > kTauZeroGate)
                    failures.push_back("tau(0) constraint violated");
            }

            // bijection: every distinct sov tau matched by exactly one bethe tau
            std::vector<bool> used(bethe_taus.size(), false);
            bool bijective = distinct.size() == bethe_taus.size();
            double worst_match = 0.0;
            for (const auto& stau : distinct) {
                double best = std::numeric_limits<double>::infinity();
                std::size_t best_i = 0;
                for (std::size_t i = 0; i < bethe_taus.size(); ++i) {
                    if (used[i]) continue;
                    const double d = poly_distance(stau, bethe_taus[i]);
                    if (d < best) {
                        best = d;
                        best_i = i;
                    }
                }
                if (best < kTauMatchGate) {
                    used[best_i] = true;
                    worst_match = std::max(worst_match, best);
                } else {
                    bijective = false;
                }
            }
            sov.bijective = bijective;
            sov.max_tau_match = worst_match;
            if (!bijective) failures.push_back("tau bijection between solver and spectrum failed");
        }
    }

    // path failure handling
    int in_range_total = 0, in_range_failed = 0;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (!tasks[i].seed.in_Zlo) continue;
        ++in_range_total;
        if (results[i].sol.path_status != PathStatus::Converged) ++in_range_failed;
    }
    double fail_frac = in_range_total > 0 ? double(in_range_failed) / in_range_total : 0.0;
    double allowed = cfg.max_path_fail_frac >= 0.0 ? cfg.max_path_fail_frac
                                                   : (ctx.kappa_one ? 1.0 : 0.0);

    for (auto& res : results) report.records.push_back(res.rec);

    // serialized outputs
    std::ostringstream lines;
    for (const auto& r : report.records) lines << record_json(r).dump() << "\n";
    report.jsonl = lines.str();

    std::ostringstream csv;
    csv << "ell,expected_dim,found_orbits,max_residual,max_eigen_residual,max_det_rel_err,"
           "basis_rank,basis_condition\n";
    for (const auto& row : report.summary)
        csv << row.ell << "," << row.expected_dim << "," << row.found_orbits << ","
            << format_double(row.max_residual) << "," << format_double(row.max_eigen_residual)
            << "," << format_double(row.max_det_rel_err) << "," << row.basis_rank << ","
            << format_double(row.basis_condition) << "\n";
    report.summary_csv = csv.str();

    njson meta;
    meta["version"] = version();
    meta["experiment"] = cfg.experiment;
    {
        njson s;
        s["variant"] = ctx.spec.variant == Variant::Additive ? "additive" : "multiplicative";
        s["n"] = ctx.spec.n;
        njson ws = njson::array();
        for (const auto& w : ctx.spec.weights) {
            njson wj;
            wj["integral"] = w.integral;
            if (w.integral) {
                wj["steps"] = w.steps;
            } else {
                wj["lambda"] = complex_json(w.lambda);
                wj["q_two_lambda"] = complex_json(w.q_two_lambda);
                wj["truncation"] = w.truncation;
            }
            ws.push_back(wj);
        }
        s["weights"] = ws;
        s["z"] = tuple_json(ctx.spec.z);
        s["kappa"] = complex_json(ctx.spec.kappa);
        s["theta"] = complex_json(ctx.spec.theta);
        s["q"] = complex_json(ctx.spec.q);
        s["rng_seed"] = ctx.spec.rng_seed;
        s["residual_tol"] = ctx.spec.tol.residual_tol;
        s["dedup_tol"] = ctx.spec.tol.dedup_tol;
        s["rank_tol"] = ctx.spec.tol.rank_tol;
        s["margin_tol"] = ctx.spec.tol.margin_tol;
        double gap = 0.0;
        s["well_separated"] = ctx.spec.well_separated(&gap);
        s["lattice_min_gap"] = gap;
        meta["spec"] = s;
    }
    meta["ell_list"] = ells;
    meta["kappa_policy"] = cfg.kappa_policy;
    meta["workers"] = cfg.workers;
    meta["track_out_of_range"] = cfg.track_out_of_range;
    meta["path_fail_fraction"] = fail_frac;
    meta["coupling_perturb_attempts"] = perturb_attempts;
    meta["nongeneric_orbit_collisions"] = nongeneric_collisions;
    if (sov.ran) {
        njson sj;
        sj["distinct_tau"] = sov.distinct_tau;
        sj["expected"] = sov.expected;
        sj["bijective"] = sov.bijective;
        sj["max_tau_match"] = sov.max_tau_match;
        sj["max_rank_one_residual"] = sov.max_rank_one;
        if (ctx.spec.variant == Variant::Multiplicative)
            sj["max_tau_zero_err"] = sov.max_tau_zero_err;
        meta["sov"] = sj;
    } else if (sov.skipped_partial) {
        meta["sov"] = "skipped: partial level list";
    }
    meta["failures"] = failures;
    const auto t_end = std::chrono::steady_clock::now();
    meta["elapsed_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(t_end - t_start).count();
    report.meta_json = meta.dump(2) + "\n";

    if (!failures.empty())
        report.exit_code = 2;
    else if (fail_frac > allowed + 1e-12)
        report.exit_code = 3;
    else
        report.exit_code = 0;

    if (!cfg.out_prefix.empty()) write_report_files(report, cfg.out_prefix);
    return report;
}

void write_report_files(const RunReport& report, const std::string& prefix) {
    const std::filesystem::path p(prefix);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream(prefix + ".jsonl", std::ios::binary) << report.jsonl;
    std::ofstream(prefix + ".summary.csv", std::ios::binary) << report.summary_csv;
    std::ofstream(prefix + ".meta.json", std::ios::binary) << report.meta_json;
}

DiffSummary compare_reports(const std::string& path_a, const std::string& path_b, double tol) {
    const auto load = [](const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open " + path);
        std::map<std::pair<int, int>, njson> orbits;  // (ell, orbit_id) -> first row
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            njson row = njson::parse(line);
            const std::pair<int, int> key{row["ell"].get<int>(), row["orbit_id"].get<int>()};
            if (!orbits.count(key)) orbits[key] = row;
        }
        return orbits;
    };

    const auto tuple_of = [](const njson& row) {
        std::vector<Complex> t;
        for (const auto& c : row["t"]) t.push_back(Complex(c[0].get<double>(), c[1].get<double>()));
        return sorted_tuple(t);
    };

    auto a = load(path_a);
    auto b = load(path_b);
    DiffSummary diff;

    const auto drift_between = [&](const njson& ra, const njson& rb) {
        double d = 0.0;
        const auto ta = tuple_of(ra), tb = tuple_of(rb);
        if (ta.size() != tb.size()) return std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < ta.size(); ++i) d = std::max(d, std::abs(ta[i] - tb[i]));
        for (const char* key : {"residual", "w_norm"}) {
            if (ra[key].is_number() && rb[key].is_number())
                d = std::max(d, std::abs(ra[key].get<double>() - rb[key].get<double>()));
        }
        return d;
    };

    std::vector<std::pair<int, njson>> spare_b;  // unmatched-by-id rows of b, with ell
    for (auto it = b.begin(); it != b.end();) {
        if (a.count(it->first)) {
            ++it;
        } else {
            spare_b.emplace_back(it->first.first, it->second);
            it = b.erase(it);
        }
    }
    for (const auto& [key, row] : a) {
        auto hit = b.find(key);
        if (hit != b.end()) {
            diff.max_drift = std::max(diff.max_drift, drift_between(row, hit->second));
            ++diff.compared;
            continue;
        }
        // nearest-t among spare rows of the same level
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_i = spare_b.size();
        for (std::size_t i = 0; i < spare_b.size(); ++i) {
            if (spare_b[i].first != key.first) continue;
            const double d = drift_between(row, spare_b[i].second);
            if (d < best) {
                best = d;
                best_i = i;
            }
        }
        if (best_i < spare_b.size() && best <= tol) {
            diff.max_drift = std::max(diff.max_drift, best);
            ++diff.compared;
            spare_b.erase(spare_b.begin() + static_cast<std::ptrdiff_t>(best_i));
        } else {
            ++diff.unmatched_a;
        }
    }
    diff.unmatched_b = static_cast<int>(spare_b.size());
    return diff;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r\n");
            const auto e = s.find_last_not_of(" \t\r\n");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = val;
    }
    return kv;
}

Complex parse_complex(const std::string& text_in) {
    std::string text;
    for (char c : text_in)
        if (!std::isspace(static_cast<unsigned char>(c))) text.push_back(c);
    if (text.empty()) throw std::invalid_argument("empty complex literal");

    const bool imag_tail = text.back() == 'i' || text.back() == 'I' || text.back() == 'j';
    if (!imag_tail) {
        std::size_t pos = 0;
        const double v = std::stod(text, &pos);
        if (pos != text.size()) throw std::invalid_argument("bad complex literal: " + text_in);
        return Complex(v, 0.0);
    }
    std::string body = text.substr(0, text.size() - 1);
    // split at the last +/- that is not an exponent sign
    std::size_t split = std::string::npos;
    for (std::size_t i = body.size(); i-- > 1;) {
        if ((body[i] == '+' || body[i] == '-') && body[i - 1] != 'e' && body[i - 1] != 'E') {
            split = i;
            break;
        }
    }
    if (split == std::string::npos) {
        if (body.empty() || body == "+") return Complex(0.0, 1.0);
        if (body == "-") return Complex(0.0, -1.0);
        std::size_t pos = 0;
        const double v = std::stod(body, &pos);
        if (pos != body.size()) throw std::invalid_argument("bad complex literal: " + text_in);
        return Complex(0.0, v);
    }
    const std::string re = body.substr(0, split);
    std::string im = body.substr(split);
    if (im == "+") im = "1";
    if (im == "-") im = "-1";
    std::size_t pr = 0, pi = 0;
    const double vr = std::stod(re, &pr);
    const double vi = std::stod(im, &pi);
    if (pr != re.size() || pi != im.size())
        throw std::invalid_argument("bad complex literal: " + text_in);
    return Complex(vr, vi);
}

namespace {

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

}  // namespace

ExperimentConfig config_from_kv(const std::map<std::string, std::string>& kv) {
    ExperimentConfig cfg;
    const auto get = [&](const char* key) -> const std::string* {
        const auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };

    if (const auto* v = get("variant")) {
        if (*v == "additive")
            cfg.spec.variant = Variant::Additive;
        else if (*v == "multiplicative")
            cfg.spec.variant = Variant::Multiplicative;
        else
            throw std::invalid_argument("variant must be additive or multiplicative");
    }
    if (const auto* v = get("q")) cfg.spec.q = parse_complex(*v);

    if (const auto* v = get("weights")) {
        for (const auto& entry : split_list(*v)) {
            const auto colon = entry.find(':');
            if (colon == std::string::npos) {
                const int steps = std::stoi(entry);
                cfg.spec.weights.push_back(cfg.spec.variant == Variant::Additive
                                               ? Weight::integral_additive(steps)
                                               : Weight::integral_multiplicative(steps));
            } else {
                const Complex val = parse_complex(entry.substr(0, colon));
                const int trunc = std::stoi(entry.substr(colon + 1));
                cfg.spec.weights.push_back(cfg.spec.variant == Variant::Additive
                                               ? Weight::generic_additive(val, trunc)
                                               : Weight::generic_multiplicative(val, trunc));
            }
        }
        cfg.spec.n = static_cast<int>(cfg.spec.weights.size());
    } else {
        throw std::invalid_argument("config requires weights");
    }
    if (const auto* v = get("n"))
        if (std::stoi(*v) != cfg.spec.n)
            throw std::invalid_argument("n does not match the weights list");

    if (const auto* v = get("z"))
        for (const auto& entry : split_list(*v)) cfg.spec.z.push_back(parse_complex(entry));

    if (const auto* v = get("kappa")) {
        if (*v == "generic")
            cfg.kappa_policy = "generic";
        else if (*v == "one")
            cfg.kappa_policy = "one";
        else
            cfg.spec.kappa = parse_complex(*v);
    }
    if (const auto* v = get("theta")) {
        if (*v == "generic")
            cfg.kappa_policy = "generic";
        else
            cfg.spec.theta = parse_complex(*v);
    }
    if (const auto* v = get("seed")) cfg.spec.rng_seed = std::stoull(*v);
    if (const auto* v = get("experiment")) cfg.experiment = *v;
    if (const auto* v = get("ell")) {
        if (*v != "all")
            for (const auto& entry : split_list(*v)) cfg.ell_list.push_back(std::stoi(entry));
    }
    if (const auto* v = get("workers")) cfg.workers = std::stoi(*v);
    if (const auto* v = get("out")) cfg.out_prefix = *v;
    if (const auto* v = get("track_out_of_range")) cfg.track_out_of_range = *v == "1" || *v == "true";
    if (const auto* v = get("max_path_fail_frac")) cfg.max_path_fail_frac = std::stod(*v);
    if (const auto* v = get("eigen_samples")) cfg.eigen_samples = std::stoi(*v);
    if (const auto* v = get("residual_tol")) cfg.spec.tol.residual_tol = std::stod(*v);
    if (const auto* v = get("dedup_tol")) cfg.spec.tol.dedup_tol = std::stod(*v);
    if (const auto* v = get("rank_tol")) cfg.spec.tol.rank_tol = std::stod(*v);
    if (const auto* v = get("margin_tol")) cfg.spec.tol.margin_tol = std::stod(*v);

    cfg.validate();
    return cfg;
}

}  // namespace tq
