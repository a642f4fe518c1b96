// Acceptance run: one PASS/FAIL line per criterion. Exit status is non-zero
// when a criterion that could be run failed. Criteria whose inputs are not
// present print FAIL with "not run" and do not affect the exit status.

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "kgsens/error.hpp"
#include "kgsens/evaluator.hpp"
#include "kgsens/graph_audit.hpp"
#include "kgsens/pipeline.hpp"
#include "kgsens/sobol.hpp"
#include "../oracles.hpp"

using namespace kgsens;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kStatTolerance = 0.01;          // criterion 1, absolute
constexpr double kWnRelativeTolerance = 0.005;   // criterion 2
constexpr double kUmlsSeconds = 5.0;
constexpr double kWnSeconds = 120.0;
constexpr double kLeakageCoverage = 0.02;
constexpr double kSobolFirstTolerance = 0.02;
constexpr double kSobolInteractionTolerance = 0.05;
constexpr double kSobolSeconds = 10.0;
constexpr double kGradientSeconds = 60.0;
constexpr double kBaselineBand = 0.5;
constexpr double kMinBestMrr = 0.40;
constexpr double kS1SumLimit = 1.05;
constexpr double kContinuousS2Limit = 0.02;
constexpr double kPipelineSeconds = 45.0 * 60.0;

struct Outcome {
    bool pass = false;
    bool ran = true;
    std::string detail;
};

int failures = 0;

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(int id, const std::string& name, const std::function<Outcome()>& body) {
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, true, std::string("exception: ") + e.what()};
    }
    if (!o.pass && o.ran) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << name << ")"
              << (o.ran ? "" : " not run") << ": " << o.detail << std::endl;
}

bool near(double value, double target, double tol) { return std::abs(value - target) <= tol; }

std::string fmt(double v, int precision = 6) {
    std::ostringstream s;
    s << std::setprecision(precision) << v;
    return s.str();
}

std::string round3(double v) {
    std::ostringstream s;
    s << std::scientific << std::setprecision(2) << v;
    return s.str();
}

Outcome umls_statistics() {
    const auto t0 = std::chrono::steady_clock::now();
    auto kg = ingest_directory(testing::data_dir() / "umls");
    auto s = graph_statistics(kg);
    const double elapsed = seconds_since(t0);
    std::vector<std::string> bad;
    auto expect = [&](bool ok, const std::string& what) {
        if (!ok) bad.push_back(what);
    };
    expect(s.node_count == 135, "nodes");
    expect(s.edge_count == 6529, "edges");
    expect(s.edge_type_count == 46, "types");
    expect(round3(s.density) == "7.85e-03", "density");
    expect(s.component_count == 1, "components");
    expect(near(s.mean_degree, 96.73, kStatTolerance), "mean degree");
    expect(s.median_degree == 71.0, "median");
    expect(s.max_degree == 382, "max");
    expect(near(s.std_degree, 87.44, kStatTolerance), "std");
    expect(near(s.skewness_degree, 1.84, kStatTolerance), "skewness");
    expect(near(s.kurtosis_degree, 2.91, kStatTolerance), "kurtosis");
    expect(s.mean_component_diameter == 2.0, "diameter");
    expect(near(s.mean_component_distance, 1.61, 0.005), "distance");
    expect(s.mean_component_connectivity == 4.0, "connectivity");
    expect(elapsed < kUmlsSeconds, "runtime");
    std::string detail = "nodes " + std::to_string(s.node_count) + ", edges " + std::to_string(s.edge_count) +
                         ", types " + std::to_string(s.edge_type_count) + ", density " + round3(s.density) +
                         ", mean degree " + fmt(s.mean_degree) + ", median " + fmt(s.median_degree) + ", max " +
                         std::to_string(s.max_degree) + ", std " + fmt(s.std_degree) + ", skew " +
                         fmt(s.skewness_degree) + ", kurt " + fmt(s.kurtosis_degree) + ", diam/dist/conn " +
                         fmt(s.mean_component_diameter) + "/" + fmt(s.mean_component_distance, 4) + "/" +
                         fmt(s.mean_component_connectivity) + ", " + fmt(elapsed, 3) + " s";
    for (const auto& b : bad) detail += "; mismatch: " + b;
    return {bad.empty(), true, detail};
}

Outcome wn18rr_statistics() {
    const auto dir = testing::data_dir() / "wn18rr";
    if (!fs::exists(dir / "train.txt")) {
        return {false, false, "WN18RR splits not found under " + dir.string()};
    }
    const auto t0 = std::chrono::steady_clock::now();
    auto kg = ingest_directory(dir);
    StatisticsOptions opts;
    opts.sample_sources = 64;
    auto s = graph_statistics(kg, opts);
    const double elapsed = seconds_since(t0);
    std::vector<std::string> bad;
    auto rel = [&](double v, double target, const std::string& what) {
        if (std::abs(v - target) > kWnRelativeTolerance * std::abs(target)) bad.push_back(what);
    };
    rel(static_cast<double>(s.node_count), 40943, "nodes");
    rel(static_cast<double>(s.edge_count), 93003, "edges");
    rel(static_cast<double>(s.edge_type_count), 11, "types");
    rel(s.density, 5.04e-6, "density");
    rel(static_cast<double>(s.component_count), 13, "components");
    rel(s.mean_degree, 4.54, "mean degree");
    rel(s.median_degree, 3, "median");
    rel(static_cast<double>(s.max_degree), 521, "max");
    rel(s.std_degree, 8.58, "std");
    rel(s.skewness_degree, 26.15, "skewness");
    rel(s.kurtosis_degree, 1095.90, "kurtosis");
    if (elapsed >= kWnSeconds) bad.push_back("runtime");
    std::string detail = "nodes " + std::to_string(s.node_count) + ", edges " + std::to_string(s.edge_count) +
                         ", components " + std::to_string(s.component_count) + ", " + fmt(elapsed, 3) + " s";
    for (const auto& b : bad) detail += "; mismatch: " + b;
    return {bad.empty(), true, detail};
}

Outcome leakage() {
    const auto source = testing::data_dir() / "umls";
    auto kg = ingest_directory(source);
    auto r = flag_leaky_relations(kg);
    std::set<std::string> names;
    for (auto id : r.flagged_relations) names.insert(kg.relation_name(id));
    const bool exact = names == std::set<std::string>{"degree_of", "precedes", "derivative_of"};
    auto out = testing::fresh_dir("acceptance_umls43");
    write_directory(derive_robust_subset(kg, r.flagged_relations), out);
    auto derived = ingest_directory(out);
    auto original = ingest_directory(source);
    const bool counts = derived.relation_count() == 43 && derived.entity_count() == 135;
    const bool untouched = original.relation_count() == 46 && original.entity_count() == 135 &&
                           original.total_edge_count() == 6529;
    std::string flagged;
    for (const auto& n : names) flagged += (flagged.empty() ? "" : ",") + n;
    return {exact && r.heldout_coverage < kLeakageCoverage && counts && untouched, true,
            "theta " + fmt(r.threshold) + " flags {" + flagged + "}, held-out coverage " +
                fmt(r.heldout_coverage, 4) + ", derived " + std::to_string(derived.entity_count()) + " entities / " +
                std::to_string(derived.relation_count()) + " relations, source unchanged: " +
                (untouched ? "yes" : "no")};
}

Outcome saltelli() {
    auto design = saltelli_design(20, 2048, true);
    bool blocks = true;
    for (std::size_t j = 0; j < design.base_n && blocks; ++j) {
        const auto a = design.rows.row(design.row_of(j, SaltelliBlock::a));
        const auto b = design.rows.row(design.row_of(j, SaltelliBlock::b));
        for (std::size_t i = 0; i < design.dimension; ++i) {
            const auto ab = design.rows.row(design.row_of(j, SaltelliBlock::ab, i));
            const auto ba = design.rows.row(design.row_of(j, SaltelliBlock::ba, i));
            for (std::size_t k = 0; k < design.dimension; ++k) {
                blocks = blocks && ab[k] == (k == i ? b[k] : a[k]) && ba[k] == (k == i ? a[k] : b[k]);
            }
        }
    }
    return {design.rows.rows() == 86016 && blocks, true,
            std::to_string(design.rows.rows()) + " rows, AB/BA single-column structure " + (blocks ? "holds" : "broken")};
}

Outcome sobol_oracles() {
    auto t0 = std::chrono::steady_clock::now();
    auto lin = sobol_analyze([](std::span<const double> x) { return x[0] + 2.0 * x[1]; }, 2, 2048, 1);
    const double t_lin = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    auto prod = sobol_analyze([](std::span<const double> x) { return (x[0] - 0.5) * (x[1] - 0.5); }, 2, 2048, 1);
    const double t_prod = seconds_since(t0);
    const bool lin_ok = near(lin.s1[0], 0.2, kSobolFirstTolerance) && near(lin.s1[1], 0.8, kSobolFirstTolerance) &&
                        std::abs(lin.s2(0, 1)) <= kSobolFirstTolerance;
    const bool prod_ok = std::abs(prod.s1[0]) <= kSobolFirstTolerance && std::abs(prod.s1[1]) <= kSobolFirstTolerance &&
                         near(prod.s2(0, 1), 1.0, kSobolInteractionTolerance) &&
                         near(prod.st[0], 1.0, kSobolInteractionTolerance) &&
                         near(prod.st[1], 1.0, kSobolInteractionTolerance);
    return {lin_ok && prod_ok && t_lin < kSobolSeconds && t_prod < kSobolSeconds, true,
            "linear s1 (" + fmt(lin.s1[0], 4) + ", " + fmt(lin.s1[1], 4) + ") s2 " + fmt(lin.s2(0, 1), 3) +
                "; product s1 (" + fmt(prod.s1[0], 3) + ", " + fmt(prod.s1[1], 3) + ") s2 " + fmt(prod.s2(0, 1), 4) +
                " st (" + fmt(prod.st[0], 4) + ", " + fmt(prod.st[1], 4) + "); " + fmt(t_lin, 3) + " s / " +
                fmt(t_prod, 3) + " s"};
}

Outcome gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto combos = testing::valid_combos();
    std::size_t checked = 0, failed = 0;
    for (const auto& combo : combos) {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            ++checked;
            if (testing::gradient_check(combo, seed) > 0.0) ++failed;
        }
    }
    const double elapsed = seconds_since(t0);
    return {failed == 0 && elapsed < kGradientSeconds, true,
            std::to_string(combos.size()) + " valid combinations x 20 seeds, " + std::to_string(failed) + " of " +
                std::to_string(checked) + " checks outside rtol 1e-4, " + fmt(elapsed, 3) + " s"};
}

Outcome evaluator() {
    std::size_t mismatches = 0;
    for (std::uint64_t g = 0; g < 100; ++g) {
        const std::size_t n = 2 + g % 7;
        auto kg = testing::random_graph(n, 2, 3 * n, 1000 + g);
        std::mt19937_64 rng(g);
        auto model = EmbeddingModel::create(static_cast<Method>(g % 4), n, 2, 4, InitScheme::normal, {}, rng);
        PositiveSet pos(kg);
        std::vector<RankResult> ranks;
        evaluate(model, kg.test(), pos, Direction::both, &ranks);
        for (const auto& r : ranks) {
            if (r.filtered_rank != testing::brute_rank(model, r.triple, r.slot, kg)) ++mismatches;
        }
    }
    auto umls = ingest_directory(testing::data_dir() / "umls");
    auto robust = derive_robust_subset(umls, flag_leaky_relations(umls).flagged_relations);
    PositiveSet pos(robust);
    std::mt19937_64 rng(5);
    auto model = EmbeddingModel::create(Method::distmult, robust.entity_count(), robust.relation_count(), 64,
                                        InitScheme::xavier_normal, {}, rng);
    const double mrr = evaluate(model, robust.test(), pos).mrr;
    const double baseline = random_baseline_mrr(135);
    const bool in_band = std::abs(mrr - baseline) <= kBaselineBand * baseline;
    return {mismatches == 0 && in_band, true,
            std::to_string(mismatches) + " rank mismatches on 100 random graphs; untrained DistMult MRR on UMLS-43 " +
                fmt(mrr, 4) + " vs H_135/135 = " + fmt(baseline, 4)};
}

Outcome pipeline_end_to_end() {
    const auto t0 = std::chrono::steady_clock::now();
    auto umls = ingest_directory(testing::data_dir() / "umls");
    auto robust = derive_robust_subset(umls, flag_leaky_relations(umls).flagged_relations);
    const auto store_dir = testing::fresh_dir("acceptance_store");
    TrialStore store(store_dir);
    WorkbenchConfig config;
    const auto job = make_job("umls-43", "distmult", "KvsAll", "kl");
    SweepOptions sweep_opts;
    sweep_opts.workers = std::max(1u, std::thread::hardware_concurrency());
    auto summary = run_sweep(robust, job, 100, 2024, config, store, sweep_opts);

    const auto records = TrialStore(store_dir).records();
    double best = 0.0;
    std::size_t completed = 0;
    for (const auto& r : records) {
        if (!r.completed) continue;
        ++completed;
        best = std::max(best, r.test_mrr);
    }
    AnalysisOptions opts;
    opts.seed = 2024;
    opts.workers = sweep_opts.workers;
    auto result = analyze_dataset(records, "umls-43", config.space, opts);
    const auto out = store_dir / "analysis";
    write_analysis(result, config.space, out);
    const bool files = fs::exists(out / "s1_st.csv") && fs::exists(out / "s2_matrix.csv");

    double s1_sum = 0.0;
    for (double v : result.indices.s1) s1_sum += v;
    double worst_continuous = 0.0;
    const std::size_t d = config.space.encoded_width();
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t k = i + 1; k < d; ++k) {
            if (config.space.is_dummy_column(i) || config.space.is_dummy_column(k)) continue;
            worst_continuous = std::max(worst_continuous, std::abs(result.indices.s2(i, k)));
        }
    }
    const double baseline = random_baseline_mrr(robust.entity_count());
    const double elapsed = seconds_since(t0);
    const bool ok = records.size() == 100 && best >= kMinBestMrr && best >= 10.0 * baseline && files &&
                    s1_sum <= kS1SumLimit && worst_continuous <= kContinuousS2Limit && elapsed < kPipelineSeconds;
    return {ok, true,
            std::to_string(summary.ran) + " trials run (" + std::to_string(completed) + " completed), best test MRR " +
                fmt(best, 4) + " (baseline " + fmt(baseline, 4) + "), sum s1 " + fmt(s1_sum, 4) +
                ", max |s2| over continuous pairs " + fmt(worst_continuous, 3) + ", " +
                std::to_string(result.evaluations) + " surrogate evaluations, " + fmt(elapsed / 60.0, 3) + " min on " +
                std::to_string(sweep_opts.workers) + " worker(s)"};
}

Outcome non_reproducible() {
    IndexSet a;
    a.dataset = "a";
    a.columns = {"x", "y", "z", "w"};
    a.s1 = {0.1, 0.4, 0.2, 0.05};
    a.st = {0.2, 0.5, 0.3, 0.1};
    a.s2 = Matrix(4, 4);
    a.s2(0, 1) = 0.02;
    a.s2(1, 3) = 0.07;
    a.s2(2, 3) = -0.01;
    auto self = compare_datasets({a, a});
    IndexSet b = a;
    b.dataset = "b";
    for (auto& v : b.s1) v = 0.5 - v;
    auto flipped = compare_datasets({a, b});
    bool self_ok = true;
    for (const auto& r : self) self_ok = self_ok && near(r.r, 1.0, 1e-12);
    const bool flip_ok = flipped[0].order == "s1" && near(flipped[0].r, -1.0, 1e-12);
    return {self_ok && flip_ok, true,
            "full-scale index values and cross-dataset correlations are not targets at desk scale; compare gives "
            "self r = 1 on all orders and r = " +
                fmt(flipped[0].r) + " for a sign-flipped s1"};
}

}  // namespace

int main() {
    report(1, "graph statistics on UMLS", umls_statistics);
    report(2, "graph statistics on WN18RR", wn18rr_statistics);
    report(3, "leakage audit and UMLS-43", leakage);
    report(4, "Saltelli design", saltelli);
    report(5, "Sobol estimator oracles", sobol_oracles);
    report(6, "gradient correctness", gradients);
    report(7, "evaluator oracle and random baseline", evaluator);
    report(8, "end-to-end DistMult sweep and analysis on UMLS-43", pipeline_end_to_end);
    report(9, "non-reproducible figures; compare sanity", non_reproducible);
    return failures == 0 ? 0 : 1;
}
