// Experiment runner for the Bethe / difference-equation solver.
//
// tqsolve [--config FILE] [--experiment NAME] [--ell LIST] [--kappa VAL]
//         [--theta VAL] [--q VAL] [--seed N] [--workers N] [--out PREFIX]
// tqsolve compare A.jsonl B.jsonl [--tol X]

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "tq/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"transfer-matrix spectra via Bethe equations and separated variables"};
    app.set_version_flag("--version", tq::version());

    std::string config_path, experiment, ell, kappa, theta, q, seed, workers, out;
    app.add_option("--config", config_path, "key=value configuration file");
    app.add_option("--experiment", experiment, "bethe|basis|ortho|baxter|qbaxter|sovcheck|sweep");
    app.add_option("--ell", ell, "comma list of levels, or 'all'");
    app.add_option("--kappa", kappa, "coupling value, or 'generic'/'one'");
    app.add_option("--theta", theta, "multiplicative coupling value, or 'generic'");
    app.add_option("--q", q, "deformation parameter");
    app.add_option("--seed", seed, "rng seed");
    app.add_option("--workers", workers, "worker thread count");
    app.add_option("--out", out, "output path prefix");

    auto* cmp = app.add_subcommand("compare", "diff two JSON-lines reports at orbit level");
    std::string path_a, path_b;
    double cmp_tol = 1e-9;
    cmp->add_option("a", path_a, "first report")->required();
    cmp->add_option("b", path_b, "second report")->required();
    cmp->add_option("--tol", cmp_tol, "drift tolerance");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cmp) {
            const tq::DiffSummary diff = tq::compare_reports(path_a, path_b, cmp_tol);
            std::printf("compared=%d unmatched_a=%d unmatched_b=%d max_drift=%.3e\n",
                        diff.compared, diff.unmatched_a, diff.unmatched_b, diff.max_drift);
            return diff.empty(cmp_tol) ? 0 : 2;
        }

        std::map<std::string, std::string> kv;
        if (!config_path.empty()) kv = tq::read_config_file(config_path);
        if (!experiment.empty()) kv["experiment"] = experiment;
        if (!ell.empty()) kv["ell"] = ell;
        if (!kappa.empty()) kv["kappa"] = kappa;
        if (!theta.empty()) kv["theta"] = theta;
        if (!q.empty()) kv["q"] = q;
        if (!seed.empty()) kv["seed"] = seed;
        if (!workers.empty()) kv["workers"] = workers;
        if (!out.empty()) kv["out"] = out;

        const tq::ExperimentConfig cfg = tq::config_from_kv(kv);
        const tq::RunReport report = tq::run_experiment(cfg);

        for (const auto& row : report.summary)
            std::printf("ell=%d expected=%d found=%d max_residual=%.3e rank=%d\n", row.ell,
                        row.expected_dim, row.found_orbits, row.max_residual, row.basis_rank);
        for (const auto& f : report.failures) std::fprintf(stderr, "FAIL: %s\n", f.c_str());
        if (report.exit_code == 0) std::printf("all checks passed\n");
        return report.exit_code;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
