#pragma once
// Orchestration: job enumeration, resumable trial sweeps and the
// regression + sensitivity analysis over persisted trials.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kgsens/graph_store.hpp"
#include "kgsens/hyperspace.hpp"
#include "kgsens/kge_trainer.hpp"
#include "kgsens/sensitivity.hpp"

namespace kgsens {

struct Job {
    std::string dataset;
    std::string method;
    std::string training_method;
    std::string loss;
    bool valid = true;
    std::string invalid_reason;

    std::string id() const { return dataset + "/" + method + "/" + training_method + "/" + loss; }
};

// Every method name the validity rules know about; only transe, distmult,
// complex and rescal can be trained here.
const std::vector<std::string>& known_methods();
bool is_trainable(const std::string& method);

// Validity is a pure function of the four names.
Job make_job(const std::string& dataset, const std::string& method, const std::string& training_method,
             const std::string& loss);

// Cross product of the inputs, each job marked valid or invalid.
std::vector<Job> enumerate_jobs(const std::vector<std::string>& datasets, const std::vector<std::string>& methods,
                                const std::vector<std::string>& training_methods,
                                const std::vector<std::string>& losses);

// Trial counts used with --paper-protocol: 50 for FB15k-237, else 100.
std::size_t paper_protocol_trials(const std::string& dataset);

struct WorkbenchConfig {
    HyperparameterSpace space = default_space();
    TrainingConstants constants;
};

WorkbenchConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const WorkbenchConfig& config);

struct TrialRecord {
    std::string job_id;
    std::string dataset;
    std::string method;
    std::string training_method;
    std::string loss;
    std::size_t trial_index = 0;
    std::uint64_t seed = 0;
    nlohmann::json config = nlohmann::json::object();
    std::vector<double> encoded;
    double valid_mrr = 0.0;
    double test_mrr = 0.0;
    double hits1 = 0.0, hits3 = 0.0, hits10 = 0.0;
    std::size_t epochs_run = 0;
    double seconds = 0.0;
    bool completed = false;
    std::string failure_reason;
};

nlohmann::json record_to_json(const TrialRecord& r);
TrialRecord record_from_json(const nlohmann::json& j);

// trials.jsonl (one record per line) plus a trials.csv mirror in `dir`.
// Every append rewrites both files through a temporary and a rename.
class TrialStore {
public:
    explicit TrialStore(std::filesystem::path dir);

    const std::filesystem::path& directory() const { return dir_; }
    std::vector<TrialRecord> records() const;
    bool contains(const std::string& job_id, std::size_t trial_index) const;
    void append(const TrialRecord& record);

private:
    void flush_locked() const;

    std::filesystem::path dir_;
    mutable std::mutex mutex_;
    std::vector<TrialRecord> records_;
};

// Deterministic per-trial seed from (master seed, job id, trial index).
std::uint64_t trial_seed(std::uint64_t master_seed, const std::string& job_id, std::size_t trial_index);

// Unit-cube point of trial `trial_index`: the free columns take Sobol point
// trial_index + 1 of the free subspace, the job's training-method and loss
// groups are pinned to its levels.
std::vector<double> trial_point(const HyperparameterSpace& space, const Job& job, std::size_t trial_index);

struct SweepOptions {
    std::size_t workers = 1;
    // Stop after this many new trials (used to exercise resume).
    std::size_t max_new_trials = std::numeric_limits<std::size_t>::max();
    std::function<void(const TrialRecord&)> on_trial;
};

struct SweepSummary {
    std::size_t ran = 0;
    std::size_t skipped = 0;
    std::size_t failed = 0;
};

SweepSummary run_sweep(const KnowledgeGraph& kg, const Job& job, std::size_t n_trials, std::uint64_t master_seed,
                       const WorkbenchConfig& config, TrialStore& store, const SweepOptions& options = {});

struct AnalysisOptions {
    double fraction = 0.05;
    std::size_t base_n = 2048;
    std::uint64_t seed = 0;
    std::size_t min_trials = 40;
    std::size_t workers = 1;
    std::size_t resamples = 100;
};

struct AnalysisResult {
    std::string dataset;
    std::size_t completed_trials = 0;
    std::vector<std::string> selected_trials;  // job/trial ids used in the fit
    SurrogateModel surrogate;
    SobolIndices indices;
    GroupedIndices grouped;
    std::size_t evaluations = 0;
    std::vector<std::string> warnings;
};

// Completed records for `dataset` (pooled over jobs) -> top fraction ->
// OLS surrogate -> Sobol indices over the encoded unit cube.
AnalysisResult analyze_dataset(const std::vector<TrialRecord>& records, const std::string& dataset,
                               const HyperparameterSpace& space, const AnalysisOptions& options);

// s1_st.csv, s2_matrix.csv, grouped.csv, surrogate.json, analysis.json.
void write_analysis(const AnalysisResult& result, const HyperparameterSpace& space, const std::filesystem::path& dir);

struct IndexSet {
    std::string dataset;
    std::vector<std::string> columns;
    std::vector<double> s1, st;
    Matrix s2;
};

IndexSet read_index_set(const std::filesystem::path& dir);

struct CorrelationRow {
    std::string first, second;
    std::string order;  // "s1", "st" or "s2"
    double r = 0.0;
};

// Pearson r of s1, st and flatten_upper(s2) for every dataset pair.
std::vector<CorrelationRow> compare_datasets(const std::vector<IndexSet>& sets);
void write_correlations_csv(std::ostream& out, const std::vector<CorrelationRow>& rows);

// figure2_bars.csv (grouped s1/st) and figure3_nodes.csv /
// figure3_edges.csv (per-column s1 and s2 edges; pairs of dummies from the
// same categorical group are left out).
void write_report(const std::filesystem::path& analysis_dir, const std::filesystem::path& out_dir);

}  // namespace kgsens
