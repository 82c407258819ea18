#ifndef TQ_EXPERIMENT_HPP
#define TQ_EXPERIMENT_HPP

#include <map>
#include <string>
#include <vector>

#include "tq/bethe_vectors.hpp"
#include "tq/sov.hpp"

namespace tq {

std::string version();

struct ExperimentConfig {
    ModelSpec spec;
    std::string experiment = "sweep";  // bethe|basis|ortho|baxter|qbaxter|sovcheck|sweep
    std::vector<int> ell_list;         // empty means "all"
    std::string kappa_policy = "explicit";  // explicit|generic|one
    bool track_out_of_range = false;        // include seeds outside Z_l^o
    int workers = 1;
    std::string out_prefix;            // empty: no files written
    double max_path_fail_frac = -1.0;  // negative: resolved from the policy
    int eigen_samples = 0;             // 0: 2n+2

    void validate() const;
};

struct SolutionRecord {
    std::string experiment;
    int ell = 0;
    std::vector<int> seed_nu;
    std::vector<Complex> t;
    double residual = 0.0;
    bool admissible = false;
    bool offdiagonal = false;
    int string_detected = -1;  // 0-based; serialized 1-based or null
    int orbit_id = -1;
    std::string path_status;
    std::vector<Complex> tau_coeffs;       // empty: not computed
    double eigen_residual = -1.0;          // negative: not computed
    Complex norm_lhs{0.0}, norm_rhs{0.0};
    bool has_norms = false;
    double det_rel_err = -1.0;
    double offorbit_pairing_max = -1.0;
    double w_norm = 0.0;
    double w_rel = 0.0;
    int deg_q = -1;
    double baxter_resid = -1.0;
    double jacobian_condition = 1.0;
};

struct LevelSummary {
    int ell = 0;
    int expected_dim = 0;
    int found_orbits = 0;
    double max_residual = 0.0;
    double max_eigen_residual = 0.0;
    double max_det_rel_err = 0.0;
    int basis_rank = 0;
    double basis_condition = 0.0;
};

struct RunReport {
    std::vector<SolutionRecord> records;
    std::vector<LevelSummary> summary;
    std::vector<std::string> failures;
    int exit_code = 0;
    std::string jsonl;        // exact bytes of the record stream
    std::string summary_csv;  // exact bytes of the summary table
    std::string meta_json;
};

/// Deterministic given (config, spec.rng_seed); independent of worker count.
RunReport run_experiment(const ExperimentConfig& cfg);

/// Writes <prefix>.jsonl, <prefix>.summary.csv, <prefix>.meta.json.
void write_report_files(const RunReport& report, const std::string& prefix);

/// Draw inhomogeneities with well-separated lattices (and kappa/theta per
/// policy) deterministically from base.rng_seed.  Existing z values are kept.
ModelSpec generate_spec(const ModelSpec& base, const std::string& kappa_policy);

struct DiffSummary {
    int unmatched_a = 0;
    int unmatched_b = 0;
    int compared = 0;
    double max_drift = 0.0;
    bool empty(double tol) const {
        return unmatched_a == 0 && unmatched_b == 0 && max_drift <= tol;
    }
};

/// Orbit-level comparison of two JSON-lines reports.
DiffSummary compare_reports(const std::string& path_a, const std::string& path_b, double tol);

std::map<std::string, std::string> read_config_file(const std::string& path);
ExperimentConfig config_from_kv(const std::map<std::string, std::string>& kv);
Complex parse_complex(const std::string& text);

}  // namespace tq

#endif
