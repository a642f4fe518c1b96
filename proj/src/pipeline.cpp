#include "kgsens/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "kgsens/error.hpp"
#include "kgsens/sobol.hpp"

namespace kgsens {

namespace {

const std::vector<std::string> kTrainingMethods = {"negative_sampling", "1vsAll", "KvsAll"};
const std::vector<std::string> kLosses = {"bce", "kl", "margin_ranking"};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void write_atomically(const std::filesystem::path& path, const std::string& contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + tmp.string());
        out << contents;
        out.flush();
        if (!out) throw DataError("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string fmt_double(double v) {
    if (std::isnan(v)) return "nan";
    std::ostringstream s;
    s << std::setprecision(12) << v;
    return s.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

double parse_double(const std::string& s) {
    if (s == "nan" || s.empty()) return std::numeric_limits<double>::quiet_NaN();
    try {
        return std::stod(s);
    } catch (const std::exception&) {
        throw DataError("not a number: '" + s + "'");
    }
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) rows.push_back(split_csv_line(line));
    }
    if (rows.empty()) throw DataError("empty file " + path.string());
    return rows;
}

nlohmann::json value_to_json(const ParamValue& v) {
    if (const auto* d = std::get_if<double>(&v)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
    return std::get<std::string>(v);
}

std::vector<std::size_t> columns_of(const HyperparameterSpace& space, const std::string& dimension) {
    const auto d = space.index_of(dimension);
    std::vector<std::size_t> cols;
    for (std::size_t k = 0; k < space.dimensions()[d].width(); ++k) cols.push_back(space.offset(d) + k);
    return cols;
}

}  // namespace

const std::vector<std::string>& known_methods() {
    static const std::vector<std::string> methods = {"complex", "conve",  "cp",     "distmult",    "relational_tucker3",
                                                     "rescal",  "rotate", "simple", "transe",      "transformer",
                                                     "transh"};
    return methods;
}

bool is_trainable(const std::string& method) {
    return method == "transe" || method == "distmult" || method == "complex" || method == "rescal";
}

Job make_job(const std::string& dataset, const std::string& method, const std::string& training_method,
             const std::string& loss) {
    const auto& methods = known_methods();
    if (std::find(methods.begin(), methods.end(), method) == methods.end()) {
        throw UsageError("unknown KGE method '" + method + "'");
    }
    if (std::find(kTrainingMethods.begin(), kTrainingMethods.end(), training_method) == kTrainingMethods.end()) {
        throw UsageError("unknown training method '" + training_method + "'");
    }
    if (std::find(kLosses.begin(), kLosses.end(), loss) == kLosses.end()) {
        throw UsageError("unknown loss '" + loss + "'");
    }
    Job job{dataset, method, training_method, loss, true, {}};
    auto invalidate = [&](std::string reason) {
        job.valid = false;
        job.invalid_reason = std::move(reason);
    };
    if (method == "transformer") {
        invalidate("transformer does not support the _po scoring method");
    } else if (method == "transe" && (training_method != "negative_sampling" || loss == "kl")) {
        invalidate("transe requires negative sampling with bce or margin_ranking");
    } else if (loss == "margin_ranking" && training_method != "negative_sampling") {
        invalidate("margin_ranking requires negative sampling");
    }
    return job;
}

std::vector<Job> enumerate_jobs(const std::vector<std::string>& datasets, const std::vector<std::string>& methods,
                                const std::vector<std::string>& training_methods,
                                const std::vector<std::string>& losses) {
    if (datasets.empty() || methods.empty() || training_methods.empty() || losses.empty()) {
        throw UsageError("job enumeration needs non-empty dataset, method, training method and loss lists");
    }
    std::vector<Job> jobs;
    for (const auto& d : datasets) {
        for (const auto& m : methods) {
            for (const auto& t : training_methods) {
                for (const auto& l : losses) jobs.push_back(make_job(d, m, t, l));
            }
        }
    }
    std::vector<std::string> ids;
    for (const auto& j : jobs) ids.push_back(j.id());
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) throw UsageError("duplicate job in enumeration");
    return jobs;
}

std::size_t paper_protocol_trials(const std::string& dataset) {
    std::string lower = dataset;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    return lower.find("fb15k") != std::string::npos ? 50 : 100;
}

WorkbenchConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    WorkbenchConfig config;
    if (j.contains("space")) config.space = space_from_json(j.at("space"));
    if (j.contains("constants")) {
        const auto& c = j.at("constants");
        auto& k = config.constants;
        k.negatives = c.value("negatives", k.negatives);
        k.max_epochs = c.value("max_epochs", k.max_epochs);
        k.valid_every = c.value("valid_every", k.valid_every);
        k.margin = c.value("margin", k.margin);
        k.lr_decay = c.value("lr_decay", k.lr_decay);
        k.improvement_tolerance = c.value("improvement_tolerance", k.improvement_tolerance);
        k.direction = parse_direction(c.value("direction", std::string("both")));
        if (k.valid_every == 0) throw UsageError("valid_every must be positive");
    }
    return config;
}

nlohmann::json config_to_json(const WorkbenchConfig& config) {
    const auto& k = config.constants;
    const char* direction = k.direction == Direction::both ? "both" : k.direction == Direction::object ? "object" : "subject";
    return {{"space", space_to_json(config.space)},
            {"constants",
             {{"negatives", k.negatives},
              {"max_epochs", k.max_epochs},
              {"valid_every", k.valid_every},
              {"margin", k.margin},
              {"lr_decay", k.lr_decay},
              {"improvement_tolerance", k.improvement_tolerance},
              {"direction", direction}}}};
}

nlohmann::json record_to_json(const TrialRecord& r) {
    nlohmann::json j{{"job_id", r.job_id},
                     {"dataset", r.dataset},
                     {"method", r.method},
                     {"training_method", r.training_method},
                     {"loss", r.loss},
                     {"trial_index", r.trial_index},
                     {"seed", r.seed},
                     {"config", r.config},
                     {"encoded", r.encoded},
                     {"valid_mrr", r.valid_mrr},
                     {"test_mrr", r.test_mrr},
                     {"hits1", r.hits1},
                     {"hits3", r.hits3},
                     {"hits10", r.hits10},
                     {"epochs_run", r.epochs_run},
                     {"seconds", r.seconds},
                     {"status", r.completed ? "completed" : "failed"}};
    if (!r.completed) j["failure_reason"] = r.failure_reason;
    return j;
}

TrialRecord record_from_json(const nlohmann::json& j) {
    TrialRecord r;
    try {
        r.job_id = j.at("job_id").get<std::string>();
        r.dataset = j.at("dataset").get<std::string>();
        r.method = j.at("method").get<std::string>();
        r.training_method = j.at("training_method").get<std::string>();
        r.loss = j.at("loss").get<std::string>();
        r.trial_index = j.at("trial_index").get<std::size_t>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.config = j.at("config");
        r.encoded = j.at("encoded").get<std::vector<double>>();
        r.valid_mrr = j.at("valid_mrr").get<double>();
        r.test_mrr = j.at("test_mrr").get<double>();
        r.hits1 = j.value("hits1", 0.0);
        r.hits3 = j.value("hits3", 0.0);
        r.hits10 = j.value("hits10", 0.0);
        r.epochs_run = j.value("epochs_run", std::size_t{0});
        r.seconds = j.value("seconds", 0.0);
        r.completed = j.at("status").get<std::string>() == "completed";
        r.failure_reason = j.value("failure_reason", std::string());
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed trial record: ") + e.what());
    }
    return r;
}

TrialStore::TrialStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::ifstream in(dir_ / "trials.jsonl");
    std::string line;
    std::size_t line_no = 0;
    while (in && std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            records_.push_back(record_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw DataError("trials.jsonl:" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

std::vector<TrialRecord> TrialStore::records() const {
    std::lock_guard lock(mutex_);
    return records_;
}

bool TrialStore::contains(const std::string& job_id, std::size_t trial_index) const {
    std::lock_guard lock(mutex_);
    return std::any_of(records_.begin(), records_.end(),
                       [&](const TrialRecord& r) { return r.job_id == job_id && r.trial_index == trial_index; });
}

void TrialStore::append(const TrialRecord& record) {
    std::lock_guard lock(mutex_);
    for (const auto& r : records_) {
        if (r.job_id == record.job_id && r.trial_index == record.trial_index) {
            throw UsageError("trial " + record.job_id + "#" + std::to_string(record.trial_index) + " already stored");
        }
    }
    records_.push_back(record);
    flush_locked();
}

void TrialStore::flush_locked() const {
    std::filesystem::create_directories(dir_);
    std::string jsonl;
    for (const auto& r : records_) jsonl += record_to_json(r).dump() + "\n";
    write_atomically(dir_ / "trials.jsonl", jsonl);

    std::ostringstream csv;
    csv << "job_id,trial_index,seed,status,valid_mrr,test_mrr,hits1,hits3,hits10,epochs_run,seconds";
    std::vector<std::string> keys;
    std::size_t width = 0;
    for (const auto& r : records_) {
        for (const auto& [key, _] : r.config.items()) {
            if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
        }
        width = std::max(width, r.encoded.size());
    }
    for (const auto& k : keys) csv << ',' << k;
    for (std::size_t i = 0; i < width; ++i) csv << ",x" << i;
    csv << '\n';
    for (const auto& r : records_) {
        csv << r.job_id << ',' << r.trial_index << ',' << r.seed << ',' << (r.completed ? "completed" : "failed") << ','
            << fmt_double(r.valid_mrr) << ',' << fmt_double(r.test_mrr) << ',' << fmt_double(r.hits1) << ','
            << fmt_double(r.hits3) << ',' << fmt_double(r.hits10) << ',' << r.epochs_run << ','
            << fmt_double(r.seconds);
        for (const auto& k : keys) {
            csv << ',';
            if (!r.config.contains(k)) continue;
            const auto& v = r.config.at(k);
            if (v.is_string()) {
                csv << v.get<std::string>();
            } else {
                csv << v.dump();
            }
        }
        for (std::size_t i = 0; i < width; ++i) {
            csv << ',';
            if (i < r.encoded.size()) csv << fmt_double(r.encoded[i]);
        }
        csv << '\n';
    }
    write_atomically(dir_ / "trials.csv", csv.str());
}

std::uint64_t trial_seed(std::uint64_t master_seed, const std::string& job_id, std::size_t trial_index) {
    return splitmix64(splitmix64(master_seed ^ fnv1a(job_id)) + static_cast<std::uint64_t>(trial_index));
}

std::vector<double> trial_point(const HyperparameterSpace& space, const Job& job, std::size_t trial_index) {
    const auto training_cols = columns_of(space, "training_method");
    const auto loss_cols = columns_of(space, "loss");
    std::vector<char> pinned(space.encoded_width(), 0);
    for (auto c : training_cols) pinned[c] = 1;
    for (auto c : loss_cols) pinned[c] = 1;
    std::vector<std::size_t> free_cols;
    for (std::size_t c = 0; c < space.encoded_width(); ++c) {
        if (!pinned[c]) free_cols.push_back(c);
    }
    std::vector<double> point(space.encoded_width(), 0.0);
    if (!free_cols.empty()) {
        SobolSequence seq(free_cols.size());
        std::vector<double> sample(free_cols.size());
        seq.point(trial_index + 1, sample);
        for (std::size_t k = 0; k < free_cols.size(); ++k) point[free_cols[k]] = sample[k];
    }
    const auto& dims = space.dimensions();
    point[training_cols[dims[space.index_of("training_method")].level_index(job.training_method)]] = 1.0;
    point[loss_cols[dims[space.index_of("loss")].level_index(job.loss)]] = 1.0;
    return point;
}

SweepSummary run_sweep(const KnowledgeGraph& kg, const Job& job, std::size_t n_trials, std::uint64_t master_seed,
                       const WorkbenchConfig& config, TrialStore& store, const SweepOptions& options) {
    if (!job.valid) throw UsageError("job " + job.id() + " is invalid: " + job.invalid_reason);
    if (!is_trainable(job.method)) throw UsageError("method " + job.method + " has no scorer in this build");
    if (n_trials == 0) throw UsageError("a sweep needs at least one trial");

    const PositiveSet positives(kg);
    const auto& space = config.space;
    SweepSummary summary;
    std::vector<std::size_t> pending;
    for (std::size_t t = 0; t < n_trials; ++t) {
        if (store.contains(job.id(), t)) {
            ++summary.skipped;
        } else if (pending.size() < options.max_new_trials) {
            pending.push_back(t);
        }
    }

    auto run_one = [&](std::size_t t) {
        TrialRecord record;
        record.job_id = job.id();
        record.dataset = job.dataset;
        record.method = job.method;
        record.training_method = job.training_method;
        record.loss = job.loss;
        record.trial_index = t;
        record.seed = trial_seed(master_seed, job.id(), t);
        const auto decoded = decode(trial_point(space, job, t), space);
        for (std::size_t d = 0; d < space.dimensions().size(); ++d) {
            record.config[space.dimensions()[d].name] = value_to_json(decoded.values[d]);
        }
        record.encoded = encode(decoded.values, space);
        TrialConfig trial{job.dataset, job.method, decoded.values};
        TrainOutcome outcome;
        try {
            const auto settings = settings_from_config(trial, space, config.constants);
            outcome = train(kg, positives, settings, record.seed);
        } catch (const std::exception& e) {
            outcome.completed = false;
            outcome.failure_reason = e.what();
        }
        record.completed = outcome.completed;
        record.failure_reason = outcome.failure_reason;
        record.valid_mrr = outcome.valid_mrr;
        record.test_mrr = outcome.test.mrr;
        record.hits1 = outcome.test.hits1;
        record.hits3 = outcome.test.hits3;
        record.hits10 = outcome.test.hits10;
        record.epochs_run = outcome.epochs_run;
        record.seconds = outcome.seconds;
        if (record.completed && !(record.test_mrr > 0.0 && record.test_mrr <= 1.0)) {
            record.completed = false;
            record.failure_reason = "test MRR outside (0, 1]";
        }
        store.append(record);
        return record;
    };

    std::mutex summary_mutex;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= pending.size()) return;
            auto record = run_one(pending[i]);
            std::lock_guard lock(summary_mutex);
            ++summary.ran;
            summary.failed += !record.completed;
            if (options.on_trial) options.on_trial(record);
        }
    };
    const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, pending.size()));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    return summary;
}

AnalysisResult analyze_dataset(const std::vector<TrialRecord>& records, const std::string& dataset,
                               const HyperparameterSpace& space, const AnalysisOptions& options) {
    std::vector<const TrialRecord*> pool;
    for (const auto& r : records) {
        if (r.dataset == dataset && r.completed) pool.push_back(&r);
    }
    if (pool.size() < options.min_trials) {
        throw DataError("dataset " + dataset + " has " + std::to_string(pool.size()) + " completed trials; " +
                        std::to_string(options.min_trials) + " needed (short by " +
                        std::to_string(options.min_trials - pool.size()) + ")");
    }
    std::sort(pool.begin(), pool.end(), [](const TrialRecord* a, const TrialRecord* b) {
        return a->job_id != b->job_id ? a->job_id < b->job_id : a->trial_index < b->trial_index;
    });
    const std::size_t width = space.encoded_width();
    std::vector<double> quality;
    for (const auto* r : pool) {
        if (r->encoded.size() != width) throw DataError("trial " + r->job_id + " was encoded for a different space");
        quality.push_back(r->test_mrr);
    }

    AnalysisResult result;
    result.dataset = dataset;
    result.completed_trials = pool.size();
    const auto top = top_fraction(quality, options.fraction);
    Matrix x(top.size(), width);
    std::vector<double> y;
    for (std::size_t i = 0; i < top.size(); ++i) {
        const auto* r = pool[top[i]];
        std::copy(r->encoded.begin(), r->encoded.end(), x.row(i).begin());
        y.push_back(r->test_mrr);
        result.selected_trials.push_back(r->job_id + "#" + std::to_string(r->trial_index));
    }
    if (top.size() <= width) {
        result.warnings.push_back("surrogate fitted on " + std::to_string(top.size()) + " rows for " +
                                  std::to_string(width) + " inputs; minimum-norm solution used");
    }
    result.surrogate = fit_ols(x, y);

    SobolOptions sobol;
    sobol.workers = options.workers;
    sobol.resamples = options.resamples;
    std::atomic<std::size_t> evaluations{0};
    const auto& model = result.surrogate;
    ModelFunction f = [&](std::span<const double> point) {
        evaluations.fetch_add(1, std::memory_order_relaxed);
        return surrogate_eval(model, point, space);
    };
    result.indices = sobol_analyze(f, width, options.base_n, options.seed, sobol);
    result.evaluations = evaluations.load();
    const auto groups = space.column_groups();
    result.grouped = group_indices(result.indices, groups);
    return result;
}

void write_analysis(const AnalysisResult& result, const HyperparameterSpace& space, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const auto columns = space.column_names();
    const auto groups = space.column_groups();
    const auto& idx = result.indices;
    const std::size_t d = idx.dimension();
    {
        std::ostringstream out;
        out << "column,group,s1,s1_conf,st,st_conf\n";
        for (std::size_t i = 0; i < d; ++i) {
            out << columns[i] << ',' << groups[i] << ',' << fmt_double(idx.s1[i]) << ',' << fmt_double(idx.s1_conf[i])
                << ',' << fmt_double(idx.st[i]) << ',' << fmt_double(idx.st_conf[i]) << '\n';
        }
        write_atomically(dir / "s1_st.csv", out.str());
    }
    {
        std::ostringstream out;
        out << "column";
        for (const auto& c : columns) out << ',' << c;
        out << '\n';
        for (std::size_t i = 0; i < d; ++i) {
            out << columns[i];
            for (std::size_t k = 0; k < d; ++k) out << ',' << (k > i ? fmt_double(idx.s2(i, k)) : "0");
            out << '\n';
        }
        write_atomically(dir / "s2_matrix.csv", out.str());
    }
    {
        std::ostringstream out;
        out << "group,s1,st\n";
        for (std::size_t g = 0; g < result.grouped.names.size(); ++g) {
            out << result.grouped.names[g] << ',' << fmt_double(result.grouped.s1[g]) << ','
                << fmt_double(result.grouped.st[g]) << '\n';
        }
        write_atomically(dir / "grouped.csv", out.str());
    }
    nlohmann::json surrogate{{"intercept", result.surrogate.intercept},
                             {"coefficients", result.surrogate.coefficients},
                             {"columns", columns},
                             {"r_squared", result.surrogate.r_squared},
                             {"training_row_count", result.surrogate.training_row_count},
                             {"rank", result.surrogate.rank}};
    write_atomically(dir / "surrogate.json", surrogate.dump(2) + "\n");
    nlohmann::json meta{{"dataset", result.dataset},
                        {"completed_trials", result.completed_trials},
                        {"selected_trials", result.selected_trials},
                        {"base_n", idx.base_n},
                        {"evaluations", result.evaluations},
                        {"warnings", result.warnings}};
    write_atomically(dir / "analysis.json", meta.dump(2) + "\n");
}

IndexSet read_index_set(const std::filesystem::path& dir) {
    IndexSet set;
    set.dataset = dir.filename().string();
    if (std::ifstream meta(dir / "analysis.json"); meta) {
        try {
            auto j = nlohmann::json::parse(meta);
            set.dataset = j.value("dataset", set.dataset);
        } catch (const nlohmann::json::exception&) {
        }
    }
    const auto s1 = read_csv(dir / "s1_st.csv");
    for (std::size_t r = 1; r < s1.size(); ++r) {
        if (s1[r].size() < 6) throw DataError("malformed s1_st.csv row in " + dir.string());
        set.columns.push_back(s1[r][0]);
        set.s1.push_back(parse_double(s1[r][2]));
        set.st.push_back(parse_double(s1[r][4]));
    }
    const auto s2 = read_csv(dir / "s2_matrix.csv");
    const std::size_t d = set.columns.size();
    if (s2.size() != d + 1) throw DataError("s2_matrix.csv does not match s1_st.csv in " + dir.string());
    set.s2 = Matrix(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        if (s2[i + 1].size() != d + 1) throw DataError("malformed s2_matrix.csv row in " + dir.string());
        for (std::size_t k = 0; k < d; ++k) set.s2(i, k) = parse_double(s2[i + 1][k + 1]);
    }
    return set;
}

std::vector<CorrelationRow> compare_datasets(const std::vector<IndexSet>& sets) {
    if (sets.size() < 2) throw UsageError("compare needs at least two index sets");
    for (const auto& s : sets) {
        if (s.s1.size() != sets.front().s1.size() || s.columns != sets.front().columns) {
            throw UsageError("index sets were computed over different encoded spaces");
        }
    }
    std::vector<CorrelationRow> rows;
    auto correlate = [](std::span<const double> u, std::span<const double> v) {
        try {
            return pearson(u, v);
        } catch (const DegenerateError&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    };
    for (std::size_t a = 0; a < sets.size(); ++a) {
        for (std::size_t b = a + 1; b < sets.size(); ++b) {
            const auto& u = sets[a];
            const auto& v = sets[b];
            rows.push_back({u.dataset, v.dataset, "s1", correlate(u.s1, v.s1)});
            rows.push_back({u.dataset, v.dataset, "st", correlate(u.st, v.st)});
            rows.push_back({u.dataset, v.dataset, "s2", correlate(flatten_upper(u.s2), flatten_upper(v.s2))});
        }
    }
    return rows;
}

void write_correlations_csv(std::ostream& out, const std::vector<CorrelationRow>& rows) {
    out << "dataset_pair,order,r\n";
    for (const auto& r : rows) out << r.first << " - " << r.second << ',' << r.order << ',' << fmt_double(r.r) << '\n';
}

void write_report(const std::filesystem::path& analysis_dir, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    const auto grouped = read_csv(analysis_dir / "grouped.csv");
    {
        std::ostringstream out;
        out << "group,first_order,total_order\n";
        for (std::size_t r = 1; r < grouped.size(); ++r) {
            if (grouped[r].size() < 3) throw DataError("malformed grouped.csv");
            out << grouped[r][0] << ',' << grouped[r][1] << ',' << grouped[r][2] << '\n';
        }
        write_atomically(out_dir / "figure2_bars.csv", out.str());
    }
    const auto set = read_index_set(analysis_dir);
    const auto s1_rows = read_csv(analysis_dir / "s1_st.csv");
    std::vector<std::string> groups;
    for (std::size_t r = 1; r < s1_rows.size(); ++r) groups.push_back(s1_rows[r][1]);
    auto is_dummy = [&](std::size_t i) { return set.columns[i].find('=') != std::string::npos; };
    auto dummy_family = [&](std::size_t i) { return set.columns[i].substr(0, set.columns[i].find('=')); };
    {
        std::ostringstream out;
        out << "node,group,dummy,first_order\n";
        for (std::size_t i = 0; i < set.columns.size(); ++i) {
            out << set.columns[i] << ',' << groups[i] << ',' << (is_dummy(i) ? "true" : "false") << ','
                << fmt_double(set.s1[i]) << '\n';
        }
        write_atomically(out_dir / "figure3_nodes.csv", out.str());
    }
    {
        std::ostringstream out;
        out << "source,target,second_order\n";
        for (std::size_t i = 0; i < set.columns.size(); ++i) {
            for (std::size_t k = i + 1; k < set.columns.size(); ++k) {
                if (is_dummy(i) && is_dummy(k) && dummy_family(i) == dummy_family(k)) continue;
                out << set.columns[i] << ',' << set.columns[k] << ',' << fmt_double(set.s2(i, k)) << '\n';
            }
        }
        write_atomically(out_dir / "figure3_edges.csv", out.str());
    }
}

}  // namespace kgsens
