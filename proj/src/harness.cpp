#include "seqteach/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "seqteach/checkpoint.hpp"
#include "seqteach/error.hpp"
#include "seqteach/io.hpp"
#include "seqteach/random.hpp"
#include "text_util.hpp"

namespace seqteach {

using nlohmann::json;

namespace {

json history_json(const std::vector<CostRecord>& history) {
    json out = json::array();
    for (const auto& r : history) out.push_back({r.step, r.mean, r.std_error});
    return out;
}

std::vector<CostRecord> history_from_json(const json& j) {
    std::vector<CostRecord> out;
    for (const auto& r : j) out.push_back(CostRecord{r.at(0).get<std::size_t>(), r.at(1).get<double>(), r.at(2).get<double>()});
    return out;
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fmt(double x, int digits = 2) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

std::string condition_slug(std::string_view name) {
    if (name == kStage1Condition) return "pbar_star";
    if (name == kStage2Condition) return "pq_star";
    std::string out;
    for (char c : name) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
    return out;
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

}  // namespace

OptimizerConfig desk_optimizer_config() {
    OptimizerConfig c;
    c.horizon = 1500;
    c.n_dirs = 12;
    c.n_seq = 5;
    c.n_steps = 40;
    return c;
}

void ExperimentConfig::validate() const {
    optimizer.validate();
    if (optimizer.horizon < 1) throw UsageError("horizon T must be >= 1");
    if (pool_size < 2) throw UsageError("pool size K must be >= 2");
    if (n_best < 2) throw UsageError("n_best must be >= 2 for the t-tests");
    if (split_reps < 1) throw UsageError("split_reps must be >= 1");
    for (const auto& b : baselines) parse_baseline(b);
    if (vocabulary.path.empty()) {
        if (pool_size >= vocabulary.synthetic.n_words) throw UsageError("pool size K must be smaller than |V|");
        if (!(vocabulary.synthetic.exception_rate >= 0.0 && vocabulary.synthetic.exception_rate <= 1.0)) {
            throw UsageError("exception_rate must lie in [0, 1]");
        }
    }
}

json to_json(const ExperimentConfig& c) {
    const auto& s = c.vocabulary.synthetic;
    return json{
        {"vocabulary",
         {{"path", c.vocabulary.path},
          {"phonemes", c.vocabulary.phonemes},
          {"synthetic",
           {{"n_words", s.n_words},
            {"n_consonants", s.n_consonants},
            {"n_vowel_graphemes", s.n_vowel_graphemes},
            {"exception_rate", s.exception_rate},
            {"zipf_exponent", s.zipf_exponent}}}}},
        {"pool_size", c.pool_size},
        {"split_reps", c.split_reps},
        {"optimizer", to_json(c.optimizer)},
        {"baselines", c.baselines},
        {"n_best", c.n_best},
        {"seed", c.seed},
    };
}

ExperimentConfig experiment_config_from_json(const json& j) {
    try {
        ExperimentConfig c;
        const auto& v = j.at("vocabulary");
        c.vocabulary.path = v.at("path").get<std::string>();
        c.vocabulary.phonemes = v.at("phonemes").get<std::string>();
        const auto& s = v.at("synthetic");
        c.vocabulary.synthetic.n_words = s.at("n_words").get<std::size_t>();
        c.vocabulary.synthetic.n_consonants = s.at("n_consonants").get<std::size_t>();
        c.vocabulary.synthetic.n_vowel_graphemes = s.at("n_vowel_graphemes").get<std::size_t>();
        c.vocabulary.synthetic.exception_rate = s.at("exception_rate").get<double>();
        c.vocabulary.synthetic.zipf_exponent = s.at("zipf_exponent").get<double>();
        c.pool_size = j.at("pool_size").get<std::size_t>();
        c.split_reps = j.at("split_reps").get<std::size_t>();
        c.optimizer = optimizer_config_from_json(j.at("optimizer"));
        c.baselines = j.at("baselines").get<std::vector<std::string>>();
        c.n_best = j.at("n_best").get<std::size_t>();
        c.seed = j.at("seed").get<std::uint64_t>();
        return c;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed experiment config: ") + e.what());
    }
}

BaselineSpec parse_baseline(std::string_view text) {
    const std::string t(detail::trim(text));
    if (t.empty()) throw UsageError("empty baseline name");
    BaselineSpec spec;
    spec.name = t;
    const auto colon = t.find(':');
    spec.kind = t.substr(0, colon);
    if (colon != std::string::npos) {
        const std::string transform = t.substr(colon + 1);
        if (transform == "inverse") {
            spec.transform = WeightTransform::inverse;
        } else if (transform != "identity") {
            throw UsageError("baseline transform must be 'identity' or 'inverse', got '" + transform + "'");
        }
    }
    if (spec.kind == "uniform" && spec.transform != WeightTransform::identity) {
        throw UsageError("the uniform baseline takes no transform");
    }
    return spec;
}

ParseResult load_vocabulary(const VocabularySource& source, std::uint64_t master_seed) {
    if (source.path.empty()) {
        return ParseResult{generate_synthetic_vocabulary(source.synthetic, derive_seed(master_seed, {kVocabularySeedLabel})),
                           {}};
    }
    const PhonemeInventory inventory = source.phonemes.empty() ? PhonemeInventory::builtin_english()
                                                               : PhonemeInventory::parse(read_text_file(source.phonemes));
    return parse_vocabulary_lenient(read_text_file(source.path), inventory);
}

PreparedTask prepare_task(const ExperimentConfig& config, const Executor& executor) {
    config.validate();
    auto loaded = load_vocabulary(config.vocabulary, config.seed);
    PreparedTask prepared{std::move(loaded.vocabulary), {}, std::move(loaded.rejected)};
    const auto& vocab = prepared.vocab;
    if (config.pool_size >= vocab.size()) {
        throw UsageError("pool size K = " + std::to_string(config.pool_size) + " must be smaller than |V| = " +
                         std::to_string(vocab.size()));
    }
    for (const auto& b : config.baselines) {
        const auto spec = parse_baseline(b);
        if (spec.kind == "uniform") continue;
        const auto& cols = vocab.weight_columns();
        if (std::find(cols.begin(), cols.end(), spec.kind) == cols.end()) {
            throw DataError("baseline column '" + spec.kind + "' is not in the vocabulary");
        }
    }
    if (config.split_reps <= 1) {
        prepared.split = split_vocabulary(vocab.size(), config.pool_size, split_seed(config.seed, config.pool_size, 0));
    } else {
        EfficiencySettings settings;
        settings.reps = config.split_reps;
        settings.init_scale = config.optimizer.init_scale;
        prepared.split = efficiency_cell(vocab, config.pool_size, settings, config.seed, executor).best_split;
    }
    // Baselines must be defined on the chosen pool.
    for (const auto& b : config.baselines) {
        const auto spec = parse_baseline(b);
        baseline_distribution(vocab, prepared.split.pool, spec.kind, spec.transform);
    }
    return prepared;
}

// ---------------------------------------------------------------------------

std::uint64_t split_seed(std::uint64_t master_seed, std::size_t pool_size, std::size_t rep) {
    return derive_seed(master_seed, {kSplitSeedLabel, pool_size, rep});
}

double quantile(std::vector<double> xs, double q) {
    if (xs.empty()) throw UsageError("quantile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw UsageError("quantile level must lie in [0, 1]");
    std::sort(xs.begin(), xs.end());
    const double h = q * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= xs.size()) return xs.back();
    return xs[lo] + (h - static_cast<double>(lo)) * (xs[lo + 1] - xs[lo]);
}

EfficiencyCell efficiency_cell(const Vocabulary& vocab, std::size_t pool_size, const EfficiencySettings& settings,
                               std::uint64_t master_seed, const Executor& executor) {
    if (settings.reps < 1) throw UsageError("efficiency sweep needs reps >= 1");
    if (pool_size < 1 || pool_size >= vocab.size()) {
        throw UsageError("pool size " + std::to_string(pool_size) + " must lie in [1, |V|)");
    }
    struct Rep {
        PoolSplit split;
        std::size_t correct = 0;
        std::size_t epochs = 0;
    };
    std::vector<Rep> reps(settings.reps);
    executor.for_each_index(settings.reps, [&](std::size_t r) {
        const std::uint64_t seed = split_seed(master_seed, pool_size, r);
        Rep& out = reps[r];
        out.split = split_vocabulary(vocab.size(), pool_size, seed);
        LearnerState learner = init_learner(derive_seed(seed, {1}), settings.init_scale);
        auto trained = batch_train_to_convergence(std::move(learner), vocab.items(), out.split.pool,
                                                  settings.learning_rate, settings.criteria, vocab.inventory());
        out.correct = count_correct(trained.state, vocab.items(), out.split.test, vocab.inventory());
        out.epochs = trained.epochs;
    });

    EfficiencyCell cell;
    cell.pool_size = pool_size;
    cell.reps = settings.reps;
    const double test_size = static_cast<double>(vocab.size() - pool_size);
    for (std::size_t r = 0; r < reps.size(); ++r) {
        cell.efficiencies.push_back(static_cast<double>(reps[r].correct) / static_cast<double>(pool_size));
        cell.epochs.push_back(reps[r].epochs);
        if (reps[r].correct > reps[cell.best_rep].correct) cell.best_rep = r;
    }
    cell.mean = std::accumulate(cell.efficiencies.begin(), cell.efficiencies.end(), 0.0) /
                static_cast<double>(cell.efficiencies.size());
    cell.q25 = quantile(cell.efficiencies, 0.25);
    cell.q75 = quantile(cell.efficiencies, 0.75);
    cell.best_test_accuracy = static_cast<double>(reps[cell.best_rep].correct) / test_size;
    cell.best_split = std::move(reps[cell.best_rep].split);
    return cell;
}

EfficiencyReport efficiency_experiment(const Vocabulary& vocab, const EfficiencySettings& settings,
                                       std::uint64_t master_seed, const Executor& executor) {
    EfficiencyReport report;
    report.seed = master_seed;
    for (std::size_t k : settings.pool_sizes) report.cells.push_back(efficiency_cell(vocab, k, settings, master_seed, executor));
    return report;
}

// ---------------------------------------------------------------------------

const ConditionResult* ComparisonReport::find(std::string_view name) const {
    for (const auto& c : conditions) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

ConditionResult evaluate_condition(std::string name, const TimeVaryingDistribution& tvd, const TeachingTask& task,
                                   const ExperimentConfig& config, const Executor& executor,
                                   TrainingSequence* best_sequence) {
    const auto setup = LearnerSetup::from(config.optimizer, config.seed);
    const std::uint64_t seed = derive_seed(config.seed, {kEvaluationSeedLabel, fnv1a64(name)});
    auto best = select_best_sequence(tvd, task, config.n_best, setup, seed, executor);

    ConditionResult result;
    result.name = std::move(name);
    for (double c : best.summary.samples) result.accuracies.push_back(1.0 - c);
    result.mean_accuracy = 1.0 - best.summary.mean;
    result.std_error = best.summary.std_error;
    result.best_accuracy = 1.0 - best.cost;
    result.best_index = best.index;
    if (best_sequence) *best_sequence = std::move(best.sequence);
    return result;
}

ComparisonOutcome run_comparison(const ExperimentConfig& config, const PreparedTask& prepared, const Executor& executor,
                                 const ProgressFn& on_step, const std::filesystem::path& checkpoint_dir) {
    config.validate();
    const TeachingTask task = prepared.task();
    const std::size_t horizon = config.optimizer.horizon;

    ComparisonOutcome out;
    auto& report = out.report;
    report.config = to_json(config);
    report.vocab_size = prepared.vocab.size();
    report.pool_size = task.pool.size();
    report.test_size = task.test.size();
    report.n = config.n_best;

    auto add_condition = [&](std::string name, TimeVaryingDistribution tvd) {
        TrainingSequence seq;
        report.conditions.push_back(evaluate_condition(std::move(name), tvd, task, config, executor, &seq));
        out.distributions.push_back(std::move(tvd));
        out.best_sequences.push_back(std::move(seq));
    };

    for (const auto& b : config.baselines) {
        const auto spec = parse_baseline(b);
        add_condition(spec.name,
                      stationary(baseline_distribution(prepared.vocab, task.pool, spec.kind, spec.transform), horizon));
    }

    const json context{{"experiment", to_json(config)}};
    auto step_hook = [&](const char* file) {
        return [&, file](const OptimizerRunState& state) {
            if (!checkpoint_dir.empty()) save_checkpoint(checkpoint_dir / file, state, context);
            if (on_step) on_step(state);
        };
    };

    auto stage1 = optimize_stage1(task, config.optimizer, config.seed, executor, step_hook("stage1.ckpt.json"));
    auto stage2 =
        optimize_stage2(stage1.p_bar, task, config.optimizer, config.seed, executor, step_hook("stage2.ckpt.json"));
    report.stage1_history = stage1.run.history;
    report.stage2_history = stage2.run.history;

    add_condition(std::string(kStage1Condition), stationary(stage1.p_bar, horizon));
    add_condition(std::string(kStage2Condition), TimeVaryingDistribution(stage2.start, stage2.end, horizon));
    out.stage1 = std::move(stage1.run);
    out.stage2 = std::move(stage2.run);

    const auto& optimized = report.conditions.back();
    for (std::size_t i = 0; i + 1 < report.conditions.size(); ++i) {
        auto& c = report.conditions[i];
        try {
            c.versus_optimized = welch_t_test(optimized.accuracies, c.accuracies);
        } catch (const UsageError&) {
            c.versus_optimized.reset();
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

json to_json(const ComparisonReport& r) {
    json conditions = json::array();
    for (const auto& c : r.conditions) {
        json t = nullptr;
        if (c.versus_optimized) {
            t = {{"t", c.versus_optimized->t}, {"df", c.versus_optimized->df}, {"p_value", c.versus_optimized->p_value}};
        }
        conditions.push_back({
            {"name", c.name},
            {"n", c.accuracies.size()},
            {"mean_accuracy", c.mean_accuracy},
            {"std_error", c.std_error},
            {"best_accuracy", c.best_accuracy},
            {"best_index", c.best_index},
            {"versus_optimized", std::move(t)},
            {"accuracies", c.accuracies},
        });
    }
    return json{
        {"config", r.config},
        {"vocab_size", r.vocab_size},
        {"pool_size", r.pool_size},
        {"test_size", r.test_size},
        {"n", r.n},
        {"conditions", std::move(conditions)},
        {"stage1_history", history_json(r.stage1_history)},
        {"stage2_history", history_json(r.stage2_history)},
    };
}

ComparisonReport comparison_report_from_json(const json& j) {
    try {
        ComparisonReport r;
        r.config = j.at("config");
        r.vocab_size = j.at("vocab_size").get<std::size_t>();
        r.pool_size = j.at("pool_size").get<std::size_t>();
        r.test_size = j.at("test_size").get<std::size_t>();
        r.n = j.at("n").get<std::size_t>();
        for (const auto& c : j.at("conditions")) {
            ConditionResult cr;
            cr.name = c.at("name").get<std::string>();
            cr.accuracies = c.at("accuracies").get<std::vector<double>>();
            cr.mean_accuracy = c.at("mean_accuracy").get<double>();
            cr.std_error = c.at("std_error").get<double>();
            cr.best_accuracy = c.at("best_accuracy").get<double>();
            cr.best_index = c.at("best_index").get<std::size_t>();
            const auto& t = c.at("versus_optimized");
            if (!t.is_null()) {
                cr.versus_optimized = TTest{t.at("t").get<double>(), t.at("df").get<double>(), t.at("p_value").get<double>()};
            }
            r.conditions.push_back(std::move(cr));
        }
        r.stage1_history = history_from_json(j.at("stage1_history"));
        r.stage2_history = history_from_json(j.at("stage2_history"));
        return r;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed comparison report: ") + e.what());
    }
}

json to_json(const EfficiencyReport& r) {
    json cells = json::array();
    for (const auto& c : r.cells) {
        cells.push_back({
            {"pool_size", c.pool_size},
            {"reps", c.reps},
            {"mean", c.mean},
            {"q25", c.q25},
            {"q75", c.q75},
            {"best_rep", c.best_rep},
            {"best_test_accuracy", c.best_test_accuracy},
            {"best_pool", c.best_split.pool},
            {"efficiencies", c.efficiencies},
            {"epochs", c.epochs},
        });
    }
    return json{{"seed", r.seed}, {"cells", std::move(cells)}};
}

std::string comparison_csv(const ComparisonReport& r) {
    std::string out = "condition,n,mean_accuracy,std_error,best_accuracy,t_vs_optimized,df,p_vs_optimized\n";
    for (const auto& c : r.conditions) {
        out += csv_field(c.name) + ',' + std::to_string(c.accuracies.size()) + ',' +
               detail::format_double(c.mean_accuracy) + ',' + detail::format_double(c.std_error) + ',' +
               detail::format_double(c.best_accuracy) + ',';
        if (c.versus_optimized) {
            out += detail::format_double(c.versus_optimized->t) + ',' + detail::format_double(c.versus_optimized->df) +
                   ',' + detail::format_double(c.versus_optimized->p_value);
        } else {
            out += ",,";
        }
        out += '\n';
    }
    return out;
}

std::string history_csv(const ComparisonReport& r) {
    std::string out = "stage,step,mean_cost,std_error\n";
    auto rows = [&](int stage, const std::vector<CostRecord>& h) {
        for (const auto& rec : h) {
            out += std::to_string(stage) + ',' + std::to_string(rec.step) + ',' + detail::format_double(rec.mean) + ',' +
                   detail::format_double(rec.std_error) + '\n';
        }
    };
    rows(1, r.stage1_history);
    rows(2, r.stage2_history);
    return out;
}

std::string efficiency_csv(const EfficiencyReport& r) {
    std::string out = "pool_size,reps,mean,q25,q75,best_test_accuracy\n";
    for (const auto& c : r.cells) {
        out += std::to_string(c.pool_size) + ',' + std::to_string(c.reps) + ',' + detail::format_double(c.mean) + ',' +
               detail::format_double(c.q25) + ',' + detail::format_double(c.q75) + ',' +
               detail::format_double(c.best_test_accuracy) + '\n';
    }
    return out;
}

std::string comparison_svg(const ComparisonReport& r) {
    if (r.conditions.empty()) return {};
    constexpr double left = 60, top = 30, plot_h = 260, bar_w = 60, gap = 40;
    const double width = left + static_cast<double>(r.conditions.size()) * (bar_w + gap) + 20;
    const double height = top + plot_h + 60;
    auto y_of = [&](double acc) { return top + plot_h * (1.0 - std::clamp(acc, 0.0, 1.0)); };

    std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width, 0) + "\" height=\"" + fmt(height, 0) +
         "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    s += "<text x=\"" + fmt(width / 2, 0) + "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">Average test accuracy (N = " +
         std::to_string(r.n) + ")</text>\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = i / 4.0;
        const double y = y_of(v);
        s += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(y) + "\" x2=\"" + fmt(width - 10) + "\" y2=\"" + fmt(y) +
             "\" stroke=\"#ddd\"/>\n";
        s += "<text x=\"" + fmt(left - 6) + "\" y=\"" + fmt(y + 4) + "\" text-anchor=\"end\">" + fmt(v) + "</text>\n";
    }
    for (std::size_t i = 0; i < r.conditions.size(); ++i) {
        const auto& c = r.conditions[i];
        const double x = left + gap / 2 + static_cast<double>(i) * (bar_w + gap);
        const double cx = x + bar_w / 2;
        const double y = y_of(c.mean_accuracy);
        s += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" width=\"" + fmt(bar_w) + "\" height=\"" +
             fmt(top + plot_h - y) + "\" fill=\"#4c72b0\"/>\n";
        const double lo = y_of(c.mean_accuracy - c.std_error);
        const double hi = y_of(c.mean_accuracy + c.std_error);
        s += "<line x1=\"" + fmt(cx) + "\" y1=\"" + fmt(lo) + "\" x2=\"" + fmt(cx) + "\" y2=\"" + fmt(hi) +
             "\" stroke=\"black\"/>\n";
        s += "<line x1=\"" + fmt(cx - 8) + "\" y1=\"" + fmt(lo) + "\" x2=\"" + fmt(cx + 8) + "\" y2=\"" + fmt(lo) +
             "\" stroke=\"black\"/>\n";
        s += "<line x1=\"" + fmt(cx - 8) + "\" y1=\"" + fmt(hi) + "\" x2=\"" + fmt(cx + 8) + "\" y2=\"" + fmt(hi) +
             "\" stroke=\"black\"/>\n";
        s += "<text x=\"" + fmt(cx) + "\" y=\"" + fmt(y_of(c.best_accuracy) + 5) +
             "\" text-anchor=\"middle\" font-size=\"16\" fill=\"#c44e52\">*</text>\n";
        s += "<text x=\"" + fmt(cx) + "\" y=\"" + fmt(top + plot_h + 16) + "\" text-anchor=\"middle\">" +
             xml_escape(c.name) + "</text>\n";
        s += "<text x=\"" + fmt(cx) + "\" y=\"" + fmt(top + plot_h + 30) + "\" text-anchor=\"middle\" fill=\"#555\">" +
             fmt(c.mean_accuracy, 3) + "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

std::string efficiency_svg(const EfficiencyReport& r) {
    if (r.cells.empty()) return {};
    constexpr double left = 60, top = 30, plot_w = 420, plot_h = 240;
    double k_min = static_cast<double>(r.cells.front().pool_size), k_max = k_min, e_max = 0.0;
    for (const auto& c : r.cells) {
        k_min = std::min(k_min, static_cast<double>(c.pool_size));
        k_max = std::max(k_max, static_cast<double>(c.pool_size));
        e_max = std::max({e_max, c.q75, c.mean});
    }
    if (e_max <= 0.0) e_max = 1.0;
    auto x_of = [&](double k) { return k_max == k_min ? left + plot_w / 2 : left + plot_w * (k - k_min) / (k_max - k_min); };
    auto y_of = [&](double e) { return top + plot_h * (1.0 - e / e_max); };

    std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(left + plot_w + 40, 0) + "\" height=\"" +
         fmt(top + plot_h + 50, 0) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    s += "<text x=\"" + fmt(left + plot_w / 2, 0) +
         "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">Efficiency c/K by pool size</text>\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = e_max * i / 4.0;
        s += "<text x=\"" + fmt(left - 6) + "\" y=\"" + fmt(y_of(v) + 4) + "\" text-anchor=\"end\">" + fmt(v) + "</text>\n";
    }
    std::string band, line;
    for (const auto& c : r.cells) band += fmt(x_of(static_cast<double>(c.pool_size))) + ',' + fmt(y_of(c.q75)) + ' ';
    for (auto it = r.cells.rbegin(); it != r.cells.rend(); ++it) {
        band += fmt(x_of(static_cast<double>(it->pool_size))) + ',' + fmt(y_of(it->q25)) + ' ';
    }
    for (const auto& c : r.cells) line += fmt(x_of(static_cast<double>(c.pool_size))) + ',' + fmt(y_of(c.mean)) + ' ';
    s += "<polygon points=\"" + band + "\" fill=\"#4c72b0\" fill-opacity=\"0.25\"/>\n";
    s += "<polyline points=\"" + line + "\" fill=\"none\" stroke=\"#4c72b0\" stroke-width=\"2\"/>\n";
    for (const auto& c : r.cells) {
        const double x = x_of(static_cast<double>(c.pool_size));
        s += "<circle cx=\"" + fmt(x) + "\" cy=\"" + fmt(y_of(c.mean)) + "\" r=\"3\" fill=\"#4c72b0\"/>\n";
        s += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(top + plot_h + 16) + "\" text-anchor=\"middle\">" +
             std::to_string(c.pool_size) + "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

void emit_reports(const ComparisonReport& report, const std::filesystem::path& out_dir) {
    write_text_file(out_dir / "report.json", to_json(report).dump(2) + "\n");
    write_text_file(out_dir / "report.csv", comparison_csv(report));
    write_text_file(out_dir / "history.csv", history_csv(report));
    if (!report.conditions.empty()) write_text_file(out_dir / "accuracy.svg", comparison_svg(report));
}

void emit_reports(const EfficiencyReport& report, const std::filesystem::path& out_dir) {
    write_text_file(out_dir / "efficiency.json", to_json(report).dump(2) + "\n");
    write_text_file(out_dir / "efficiency.csv", efficiency_csv(report));
    if (!report.cells.empty()) write_text_file(out_dir / "efficiency.svg", efficiency_svg(report));
}

std::string sequence_csv(const TrainingSequence& sequence, const Vocabulary& vocab, std::span<const std::size_t> pool) {
    std::string out = "t,word\n";
    for (std::size_t t = 0; t < sequence.items.size(); ++t) {
        out += std::to_string(t) + ',' + vocab.at(pool[sequence.items[t]]).word + '\n';
    }
    return out;
}

void emit_analysis(const Vocabulary& vocab, std::span<const std::size_t> pool, const Multinomial& start,
                   const Multinomial& end, const std::filesystem::path& out_dir) {
    const auto rows = correlate_with_mean_pq(vocab, pool, start, end);
    write_text_file(out_dir / "correlations.csv", correlation_csv(rows));

    const auto vars = compute_word_variables(vocab, pool);
    std::string out = "word";
    for (const auto& [name, values] : vars.columns) out += ',' + name;
    out += ",p_start,p_end,mean_pq\n";
    for (std::size_t i = 0; i < vars.words.size(); ++i) {
        out += vars.words[i];
        for (const auto& [name, values] : vars.columns) out += ',' + detail::format_double(values[i]);
        out += ',' + detail::format_double(start[i]) + ',' + detail::format_double(end[i]) + ',' +
               detail::format_double(0.5 * (start[i] + end[i])) + '\n';
    }
    write_text_file(out_dir / "word_variables.csv", out);
}

void emit_comparison_artifacts(const ComparisonOutcome& outcome, const PreparedTask& prepared,
                               const std::filesystem::path& out_dir) {
    emit_reports(outcome.report, out_dir);
    const auto& pool = prepared.split.pool;
    for (std::size_t i = 0; i < outcome.report.conditions.size(); ++i) {
        const auto slug = condition_slug(outcome.report.conditions[i].name);
        const auto& tvd = outcome.distributions.at(i);
        write_text_file(out_dir / "distributions" / (slug + ".csv"),
                        distribution_csv(prepared.vocab, pool, tvd.start, tvd.end));
        write_text_file(out_dir / "sequences" / (slug + ".csv"),
                        sequence_csv(outcome.best_sequences.at(i), prepared.vocab, pool));
    }
    if (!outcome.distributions.empty()) {
        const auto& best = outcome.distributions.back();
        emit_analysis(prepared.vocab, pool, best.start, best.end, out_dir / "analysis");
    }
}

}  // namespace seqteach
