// kgsens: dataset audit, hyperparameter sweeps and sensitivity analysis for
// knowledge graph embeddings.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <set>

#include "kgsens/error.hpp"
#include "kgsens/graph_audit.hpp"
#include "kgsens/graph_store.hpp"
#include "kgsens/pipeline.hpp"

namespace fs = std::filesystem;
using namespace kgsens;

namespace {

void warn(const std::string& message) { std::cerr << "warning: " << message << '\n'; }

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        parts.push_back(s.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return parts;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

// "method" expands to every training/loss pair; "method/training/loss" names one job.
std::vector<Job> jobs_from_specs(const std::string& dataset, const std::vector<std::string>& specs) {
    static const std::vector<std::string> trainings = {"negative_sampling", "1vsAll", "KvsAll"};
    static const std::vector<std::string> losses = {"bce", "kl", "margin_ranking"};
    std::vector<Job> jobs;
    for (const auto& spec : specs) {
        auto parts = split(spec, '/');
        if (parts.size() == 1) {
            auto more = enumerate_jobs({dataset}, {parts[0]}, trainings, losses);
            jobs.insert(jobs.end(), more.begin(), more.end());
        } else if (parts.size() == 3) {
            jobs.push_back(make_job(dataset, parts[0], parts[1], parts[2]));
        } else {
            throw UsageError("job spec '" + spec + "' is neither METHOD nor METHOD/TRAINING/LOSS");
        }
    }
    return jobs;
}

int run_audit(const fs::path& dir, const fs::path& out_dir, double theta, std::size_t sample_pairs, bool no_distances) {
    auto kg = ingest_directory(dir, warn);
    StatisticsOptions options;
    options.sample_sources = sample_pairs;
    options.skip_distance_family = no_distances;
    const auto stats = graph_statistics(kg, options);
    const auto report = flag_leaky_relations(kg, theta);
    fs::create_directories(out_dir);
    {
        auto out = open_output(out_dir / "statistics.csv");
        write_statistics_csv(out, stats);
    }
    {
        auto out = open_output(out_dir / "leakage.csv");
        write_leakage_csv(out, kg, report);
    }
    write_statistics_csv(std::cout, stats);
    std::cout << "flagged relations (theta " << theta << "):";
    for (auto r : report.flagged_relations) std::cout << ' ' << kg.relation_name(r);
    std::cout << "\nflagged held-out coverage: " << report.heldout_coverage << '\n';
    if (stats.distances_sampled) std::cout << "distance fields estimated from sampled sources\n";
    return 0;
}

int run_derive(const fs::path& dir, double theta, fs::path out_dir) {
    auto kg = ingest_directory(dir, warn);
    const auto report = flag_leaky_relations(kg, theta);
    auto robust = derive_robust_subset(kg, report.flagged_relations);
    if (out_dir.empty()) {
        auto name = fs::absolute(dir).lexically_normal().filename().string();
        if (name.empty()) name = fs::absolute(dir).parent_path().filename().string();
        out_dir = fs::absolute(dir).lexically_normal().parent_path() /
                  (name + "-" + std::to_string(robust.relation_count()));
    }
    write_directory(robust, out_dir);
    std::cout << "wrote " << out_dir.string() << ": " << robust.entity_count() << " entities, "
              << robust.relation_count() << " relations, " << robust.total_edge_count() << " triples\n";
    return 0;
}

int run_sweep_command(const fs::path& dataset_dir, std::string dataset_name, const std::vector<std::string>& specs,
                      std::size_t trials, bool paper_protocol, std::uint64_t seed, std::size_t workers,
                      const fs::path& config_path, const fs::path& store_dir) {
    const auto config = config_path.empty() ? WorkbenchConfig{} : load_config(config_path);
    auto kg = ingest_directory(dataset_dir, warn);
    if (dataset_name.empty()) dataset_name = fs::absolute(dataset_dir).lexically_normal().filename().string();
    if (paper_protocol) trials = paper_protocol_trials(dataset_name);
    if (trials == 0) throw UsageError("--trials must be at least 1");

    TrialStore store(store_dir);
    SweepOptions options;
    options.workers = workers;
    options.on_trial = [](const TrialRecord& r) {
        std::cerr << r.job_id << " #" << r.trial_index << ": ";
        if (r.completed) {
            std::cerr << "test MRR " << r.test_mrr << " after " << r.epochs_run << " epochs (" << r.seconds << " s)\n";
        } else {
            std::cerr << "failed: " << r.failure_reason << '\n';
        }
    };
    std::size_t ran = 0, skipped = 0, failed = 0, invalid = 0;
    for (const auto& job : jobs_from_specs(dataset_name, specs)) {
        if (!job.valid) {
            std::cout << "skipping invalid job " << job.id() << ": " << job.invalid_reason << '\n';
            ++invalid;
            continue;
        }
        if (!is_trainable(job.method)) {
            std::cout << "skipping job " << job.id() << ": no scorer for " << job.method << '\n';
            ++invalid;
            continue;
        }
        auto summary = run_sweep(kg, job, trials, seed, config, store, options);
        ran += summary.ran;
        skipped += summary.skipped;
        failed += summary.failed;
    }
    std::cout << "trials run " << ran << ", resumed " << skipped << ", failed " << failed << ", jobs skipped "
              << invalid << '\n';
    return 0;
}

int run_analyze(const fs::path& store_dir, const std::string& dataset, const AnalysisOptions& options,
                const fs::path& config_path, fs::path out_dir) {
    const auto config = config_path.empty() ? WorkbenchConfig{} : load_config(config_path);
    TrialStore store(store_dir);
    auto result = analyze_dataset(store.records(), dataset, config.space, options);
    for (const auto& w : result.warnings) warn(w);
    if (out_dir.empty()) out_dir = store_dir / "analysis" / dataset;
    write_analysis(result, config.space, out_dir);
    double s1_sum = 0.0;
    for (double v : result.indices.s1) s1_sum += v;
    std::cout << "analysis of " << result.completed_trials << " trials (" << result.selected_trials.size()
              << " in surrogate, " << result.evaluations << " evaluations), sum of s1 " << s1_sum << ", written to "
              << out_dir.string() << '\n';
    return 0;
}

int run_compare(const std::vector<fs::path>& dirs, const fs::path& out) {
    std::vector<IndexSet> sets;
    for (const auto& d : dirs) sets.push_back(read_index_set(d));
    const auto rows = compare_datasets(sets);
    if (out.empty()) {
        write_correlations_csv(std::cout, rows);
    } else {
        auto file = open_output(out);
        write_correlations_csv(file, rows);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Knowledge graph embedding hyperparameter sensitivity workbench"};
    app.require_subcommand(1);

    auto* audit = app.add_subcommand("audit", "Graph statistics and inverse-relation leakage report");
    fs::path audit_dir, audit_out = ".";
    double audit_theta = kDefaultLeakageThreshold;
    std::size_t sample_pairs = 0;
    bool no_distances = false;
    audit->add_option("dataset-dir", audit_dir, "Directory with train.txt, valid.txt, test.txt")->required();
    audit->add_option("--out", audit_out, "Directory for statistics.csv and leakage.csv");
    audit->add_option("--theta", audit_theta, "Leakage threshold");
    audit->add_option("--sample-pairs", sample_pairs, "BFS from at most this many sources per component (0 = exact)");
    audit->add_flag("--no-distances", no_distances, "Skip diameter, distance and connectivity");

    auto* derive = app.add_subcommand("derive-robust", "Write the dataset without its leaky relations");
    fs::path derive_dir, derive_out;
    double derive_theta = kDefaultLeakageThreshold;
    derive->add_option("dataset-dir", derive_dir)->required();
    derive->add_option("--theta", derive_theta, "Leakage threshold");
    derive->add_option("--out", derive_out, "Output directory (default: sibling named <dataset>-<relations>)");

    auto* sweep = app.add_subcommand("sweep", "Run Sobol-sampled training trials for one or more jobs");
    fs::path sweep_dataset, sweep_config, sweep_store = "runs";
    std::string sweep_name;
    std::vector<std::string> job_specs;
    std::size_t trials = 100, workers = 1;
    std::uint64_t sweep_seed = 0;
    bool paper_protocol = false;
    sweep->add_option("--dataset", sweep_dataset, "Dataset directory")->required();
    sweep->add_option("--name", sweep_name, "Dataset name recorded in trials (default: directory name)");
    sweep->add_option("--jobs", job_specs, "METHOD or METHOD/TRAINING/LOSS, comma separated")
        ->required()
        ->delimiter(',');
    sweep->add_option("--trials", trials, "Trials per job");
    sweep->add_option("--seed", sweep_seed, "Master seed");
    sweep->add_option("--workers", workers, "Concurrent trials")->check(CLI::PositiveNumber);
    sweep->add_flag("--paper-protocol", paper_protocol, "100 trials per job, 50 on FB15k-237");
    sweep->add_option("--config", sweep_config, "Workbench JSON config");
    sweep->add_option("--out", sweep_store, "Trial store directory");

    auto* analyze = app.add_subcommand("analyze", "Fit the surrogate and compute Sobol indices");
    fs::path analyze_store = "runs", analyze_out, analyze_config;
    std::string analyze_dataset_name;
    AnalysisOptions analysis;
    analyze->add_option("--store", analyze_store, "Trial store directory");
    analyze->add_option("--dataset", analyze_dataset_name, "Dataset name as recorded in the store")->required();
    analyze->add_option("--fraction", analysis.fraction, "Share of best trials used for the surrogate")
        ->check(CLI::Range(0.0, 1.0));
    analyze->add_option("--base-n", analysis.base_n, "Saltelli base sample size");
    analyze->add_option("--seed", analysis.seed, "Bootstrap seed");
    analyze->add_option("--workers", analysis.workers, "Threads for surrogate evaluation")->check(CLI::PositiveNumber);
    analyze->add_option("--config", analyze_config, "Workbench JSON config");
    analyze->add_option("--out", analyze_out, "Output directory (default: <store>/analysis/<dataset>)");

    auto* compare = app.add_subcommand("compare", "Pearson correlation of indices between datasets");
    std::vector<fs::path> compare_dirs;
    fs::path compare_out;
    compare->add_option("index-dirs", compare_dirs, "Analysis output directories")->required()->expected(2, -1);
    compare->add_option("--out", compare_out, "CSV output (default: stdout)");

    auto* report = app.add_subcommand("report", "Bar and interaction-graph data files from an analysis");
    fs::path report_in, report_out;
    report->add_option("analysis-dir", report_in)->required();
    report->add_option("--out", report_out, "Output directory (default: analysis-dir)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*audit) return run_audit(audit_dir, audit_out, audit_theta, sample_pairs, no_distances);
        if (*derive) return run_derive(derive_dir, derive_theta, derive_out);
        if (*sweep) {
            return run_sweep_command(sweep_dataset, sweep_name, job_specs, trials, paper_protocol, sweep_seed, workers,
                                     sweep_config, sweep_store);
        }
        if (*analyze) return run_analyze(analyze_store, analyze_dataset_name, analysis, analyze_config, analyze_out);
        if (*compare) return run_compare(compare_dirs, compare_out);
        if (*report) {
            write_report(report_in, report_out.empty() ? report_in : report_out);
            return 0;
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const DegenerateError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
