// seqteach: command-line front end for the teaching experiments.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "seqteach/analysis.hpp"
#include "seqteach/checkpoint.hpp"
#include "seqteach/error.hpp"
#include "seqteach/harness.hpp"
#include "seqteach/io.hpp"
#include "seqteach/random.hpp"

namespace fs = std::filesystem;
using namespace seqteach;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kRuntime = 3 };

struct Options {
    ExperimentConfig exp;
    unsigned workers = 1;
    std::string out;
    std::string policy = "fixed";
    bool no_crn = false;

    // efficiency
    std::vector<std::size_t> pool_sizes{20, 40, 60, 80, 100};
    std::size_t reps = 10;
    double batch_lr = 0.1;
    ConvergenceCriteria criteria{};

    // optimize / sample-seq / analyze
    std::string stage = "both";
    std::string resume;
    std::string from;
    std::string baseline;
    std::uint64_t sequence_seed = 0;
    bool strict = false;
};

class Clock {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void log_step(const OptimizerRunState& s, const Clock& clock) {
    const auto& h = s.history.back();
    std::fprintf(stderr, "stage %d step %zu mean %.6f stderr %.6f wallclock %.1fs\n", static_cast<int>(s.stage), h.step,
                 h.mean, h.std_error, clock.seconds());
}

ExperimentConfig finalize(Options& o) {
    o.exp.optimizer.learner_seed_policy = parse_seed_policy(o.policy);
    o.exp.optimizer.common_random_numbers = !o.no_crn;
    o.exp.validate();
    return o.exp;
}

fs::path out_dir(const Options& o, const char* fallback) { return o.out.empty() ? fs::path(fallback) : fs::path(o.out); }

void write_or_print(const Options& o, const std::string& text) {
    if (o.out.empty()) {
        std::cout << text;
    } else {
        write_text_file(o.out, text);
    }
}

void warn_rejected(const std::vector<RowError>& rejected) {
    for (const auto& r : rejected) std::fprintf(stderr, "rejected line %zu (%s): %s\n", r.line, r.word.c_str(), r.message.c_str());
}

void save_distributions(const PreparedTask& prepared, const TimeVaryingDistribution& tvd, const fs::path& path) {
    write_text_file(path, distribution_csv(prepared.vocab, prepared.split.pool, tvd.start, tvd.end));
}

// --- subcommands -----------------------------------------------------------

int cmd_gen_vocab(Options& o) {
    const auto cfg = finalize(o);
    const auto vocab = load_vocabulary(VocabularySource{{}, {}, cfg.vocabulary.synthetic}, cfg.seed).vocabulary;
    write_or_print(o, vocab.to_tsv());
    return kOk;
}

int cmd_encode(Options& o) {
    const auto cfg = finalize(o);
    const auto loaded = load_vocabulary(cfg.vocabulary, cfg.seed);
    warn_rejected(loaded.rejected);
    std::string text = "word\torth\tphon\to\ty\n";
    for (const auto& w : loaded.vocabulary.items()) {
        text += w.word + '\t' + w.alignment.orth + '\t';
        for (std::size_t s = 0; s < w.alignment.phon.size(); ++s) text += (s ? " " : "") + w.alignment.phon[s];
        text += '\t';
        for (auto b : w.o) text += static_cast<char>('0' + b);
        text += '\t';
        for (auto b : w.y) text += static_cast<char>('0' + b);
        text += '\n';
    }
    write_or_print(o, text);
    std::fprintf(stderr, "encoded %zu words, rejected %zu\n", loaded.vocabulary.size(), loaded.rejected.size());
    if (o.strict && !loaded.rejected.empty()) throw DataError("vocabulary has rejected rows");
    return kOk;
}

int cmd_split(Options& o) {
    const auto cfg = finalize(o);
    const Executor executor(o.workers);
    const auto prepared = prepare_task(cfg, executor);
    warn_rejected(prepared.rejected);
    std::string text = "word\trole\n";
    for (auto i : prepared.split.pool) text += prepared.vocab.at(i).word + "\tpool\n";
    for (auto i : prepared.split.test) text += prepared.vocab.at(i).word + "\ttest\n";
    write_or_print(o, text);
    std::fprintf(stderr, "pool %zu, test %zu\n", prepared.split.pool.size(), prepared.split.test.size());
    return kOk;
}

int cmd_efficiency(Options& o) {
    const auto cfg = finalize(o);
    const Executor executor(o.workers);
    const auto loaded = load_vocabulary(cfg.vocabulary, cfg.seed);
    warn_rejected(loaded.rejected);
    EfficiencySettings settings;
    settings.pool_sizes = o.pool_sizes;
    settings.reps = o.reps;
    settings.learning_rate = o.batch_lr;
    settings.criteria = o.criteria;
    settings.init_scale = cfg.optimizer.init_scale;
    EfficiencyReport report;
    report.seed = cfg.seed;
    const Clock clock;
    for (auto k : settings.pool_sizes) {
        report.cells.push_back(efficiency_cell(loaded.vocabulary, k, settings, cfg.seed, executor));
        const auto& c = report.cells.back();
        std::fprintf(stderr, "K %zu mean %.4f q25 %.4f q75 %.4f wallclock %.1fs\n", k, c.mean, c.q25, c.q75, clock.seconds());
    }
    emit_reports(report, out_dir(o, "efficiency"));
    std::cout << efficiency_csv(report);
    return kOk;
}

int cmd_optimize(Options& o) {
    const Executor executor(o.workers);
    const Clock clock;
    ExperimentConfig cfg;
    std::optional<OptimizerRunState> resumed;
    if (!o.resume.empty()) {
        auto loaded = load_run_checkpoint(o.resume);
        if (!loaded.context.contains("experiment")) throw DataError("checkpoint has no experiment context to resume from");
        cfg = experiment_config_from_json(loaded.context["experiment"]);
        resumed = std::move(loaded.state);
    } else {
        cfg = finalize(o);
    }
    if (o.stage != "1" && o.stage != "2" && o.stage != "both") throw UsageError("--stage must be 1, 2 or both");

    const auto prepared = prepare_task(cfg, executor);
    warn_rejected(prepared.rejected);
    const auto task = prepared.task();
    const fs::path dir = out_dir(o, "optimize");
    const nlohmann::json context{{"experiment", to_json(cfg)}};
    auto hook = [&](const char* file) {
        return [&, file](const OptimizerRunState& s) {
            save_checkpoint(dir / file, s, context);
            log_step(s, clock);
        };
    };

    std::optional<Multinomial> p_bar;
    const bool resuming_stage2 = resumed && resumed->stage == Stage::two;
    if (!resuming_stage2 && o.stage != "2") {
        OptimizerRunState s1 = resumed ? std::move(*resumed)
                                       : make_run_state(Stage::one, cfg.optimizer, cfg.seed,
                                                        std::vector<double>(task.pool_size() - 1, 1.0));
        resume_stage(s1, task, executor, hook("stage1.ckpt.json"));
        const auto tvd = best_distribution(s1, task.pool_size());
        save_distributions(prepared, tvd, dir / "stage1_distribution.csv");
        p_bar = tvd.start;
        if (o.stage == "1") return kOk;
    }

    OptimizerRunState s2;
    if (resuming_stage2) {
        s2 = std::move(*resumed);
    } else {
        if (!p_bar) {
            if (o.from.empty()) throw UsageError("--stage 2 needs --from <stage-1 checkpoint>");
            const auto s1 = load_run_checkpoint(o.from).state;
            if (s1.stage != Stage::one) throw DataError("--from must point at a stage-1 checkpoint");
            p_bar = best_distribution(s1, task.pool_size()).start;
        }
        const auto alpha = multinomial_to_logits(*p_bar);
        std::vector<double> z0 = alpha;
        z0.insert(z0.end(), alpha.begin(), alpha.end());
        s2 = make_run_state(Stage::two, cfg.optimizer, cfg.seed, std::move(z0));
    }
    resume_stage(s2, task, executor, hook("stage2.ckpt.json"));
    save_distributions(prepared, best_distribution(s2, task.pool_size()), dir / "stage2_distribution.csv");
    return kOk;
}

int cmd_compare(Options& o) {
    const auto cfg = finalize(o);
    const Executor executor(o.workers);
    const Clock clock;
    const auto prepared = prepare_task(cfg, executor);
    warn_rejected(prepared.rejected);
    const fs::path dir = out_dir(o, "compare");
    const auto outcome =
        run_comparison(cfg, prepared, executor, [&](const OptimizerRunState& s) { log_step(s, clock); }, dir);
    emit_comparison_artifacts(outcome, prepared, dir);
    std::cout << comparison_csv(outcome.report);
    std::fprintf(stderr, "wallclock %.1fs\n", clock.seconds());
    return kOk;
}

// Task and distribution recorded in an optimizer checkpoint.
struct CheckpointView {
    ExperimentConfig config;
    PreparedTask prepared;
    TimeVaryingDistribution tvd;
};

CheckpointView open_checkpoint(const std::string& path, const Executor& executor) {
    auto loaded = load_run_checkpoint(path);
    if (!loaded.context.contains("experiment")) throw DataError("checkpoint has no experiment context");
    CheckpointView view{experiment_config_from_json(loaded.context["experiment"]), {}, {}};
    view.prepared = prepare_task(view.config, executor);
    view.tvd = best_distribution(loaded.state, view.prepared.split.pool.size());
    return view;
}

int cmd_sample_seq(Options& o) {
    const Executor executor(o.workers);
    if (o.from.empty() == o.baseline.empty()) throw UsageError("give exactly one of --from <checkpoint> or --baseline <name>");
    std::string text;
    if (!o.from.empty()) {
        const auto view = open_checkpoint(o.from, executor);
        text = sequence_csv(sample_sequence(view.tvd, o.sequence_seed), view.prepared.vocab, view.prepared.split.pool);
    } else {
        const auto cfg = finalize(o);
        const auto prepared = prepare_task(cfg, executor);
        const auto spec = parse_baseline(o.baseline);
        const auto tvd = stationary(
            baseline_distribution(prepared.vocab, prepared.split.pool, spec.kind, spec.transform), cfg.optimizer.horizon);
        text = sequence_csv(sample_sequence(tvd, o.sequence_seed), prepared.vocab, prepared.split.pool);
    }
    write_or_print(o, text);
    return kOk;
}

int cmd_analyze(Options& o) {
    const Executor executor(o.workers);
    if (o.from.empty()) throw UsageError("analyze needs --from <checkpoint>");
    const auto view = open_checkpoint(o.from, executor);
    const auto& pool = view.prepared.split.pool;
    emit_analysis(view.prepared.vocab, pool, view.tvd.start, view.tvd.end, out_dir(o, "analysis"));
    const auto rows = correlate_with_mean_pq(view.prepared.vocab, pool, view.tvd.start, view.tvd.end);
    std::printf("%-18s %8s %10s\n", "variable", "rho", "p");
    for (const auto& r : rows) {
        if (r.rho) {
            std::printf("%-18s %8.3f %10.4g%s\n", r.variable.c_str(), *r.rho, *r.p_value, r.significant() ? " *" : "");
        } else {
            std::printf("%-18s %8s %10s  %s\n", r.variable.c_str(), "-", "-", r.note.c_str());
        }
    }
    return kOk;
}

void add_experiment_options(CLI::App& app, Options& o) {
    auto& e = o.exp;
    auto& syn = e.vocabulary.synthetic;
    auto& opt = e.optimizer;
    app.add_option("--seed", e.seed, "Master seed")->capture_default_str();
    app.add_option("--workers", o.workers, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--out", o.out, "Output directory (or file for gen-vocab, encode, split, sample-seq)");
    app.add_option("--vocab", e.vocabulary.path, "Vocabulary TSV (synthetic when omitted)");
    app.add_option("--phonemes", e.vocabulary.phonemes, "Phoneme inventory TSV (builtin when omitted)");
    app.add_option("--words", syn.n_words, "Synthetic vocabulary size")->capture_default_str();
    app.add_option("--consonants", syn.n_consonants, "Synthetic consonant graphemes")->capture_default_str();
    app.add_option("--vowels", syn.n_vowel_graphemes, "Synthetic vowel graphemes")->capture_default_str();
    app.add_option("--exception-rate", syn.exception_rate, "Fraction of irregular synthetic words")->capture_default_str();
    app.add_option("--zipf", syn.zipf_exponent, "Zipf exponent of the synthetic freq column")->capture_default_str();
    app.add_option("--pool-size", e.pool_size, "Training pool size K")->capture_default_str();
    app.add_option("--split-reps", e.split_reps, "Candidate splits (best by batch training)")->capture_default_str();
    app.add_option("--horizon", opt.horizon, "Sequence length T")->capture_default_str();
    app.add_option("--eta", opt.eta, "Optimizer step size")->capture_default_str();
    app.add_option("--gamma", opt.gamma, "Optimizer momentum")->capture_default_str();
    app.add_option("--delta", opt.delta, "Finite-difference step")->capture_default_str();
    app.add_option("--n-dirs", opt.n_dirs, "Random directions per step")->capture_default_str();
    app.add_option("--n-seq", opt.n_seq, "Sequences per expectation")->capture_default_str();
    app.add_option("--steps", opt.n_steps, "Optimizer steps per stage")->capture_default_str();
    app.add_option("--learner-seed-policy", o.policy, "fixed or per_replicate")->capture_default_str();
    app.add_flag("--no-crn", o.no_crn, "Disable common random numbers");
    app.add_option("--init-scale", opt.init_scale, "Learner weight init scale")->capture_default_str();
    app.add_option("--learning-rate", opt.learner.learning_rate, "Learner learning rate")->capture_default_str();
    app.add_option("--momentum", opt.learner.momentum, "Learner Nesterov momentum")->capture_default_str();
    app.add_option("--baselines", e.baselines, "Baselines: uniform, <column>, <column>:inverse")
        ->delimiter(',')
        ->capture_default_str();
    app.add_option("--n-best", e.n_best, "Sequences per evaluated condition")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    Options o;
    CLI::App app{"Optimized training sequences for a connectionist reading model"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "TOML-style key = value file; flags override it");
    add_experiment_options(app, o);

    int (*handler)(Options&) = nullptr;
    auto sub = [&](const char* name, const char* help, int (*fn)(Options&)) {
        auto* s = app.add_subcommand(name, help);
        s->callback([&handler, fn] { handler = fn; });
        return s;
    };
    sub("gen-vocab", "Write a synthetic vocabulary TSV", cmd_gen_vocab);
    sub("encode", "Validate and encode a vocabulary", cmd_encode)->add_flag("--strict", o.strict, "Fail on rejected rows");
    sub("split", "Draw the pool/test split", cmd_split);
    auto* eff = sub("efficiency", "Efficiency sweep over pool sizes", cmd_efficiency);
    eff->add_option("--pool-sizes", o.pool_sizes, "Pool sizes K")->capture_default_str();
    eff->add_option("--reps", o.reps, "Random splits per K")->capture_default_str();
    eff->add_option("--batch-lr", o.batch_lr, "Batch learning rate")->capture_default_str();
    eff->add_option("--max-epochs", o.criteria.max_epochs, "Epoch cap")->capture_default_str();
    eff->add_option("--patience", o.criteria.patience, "Epochs without improvement")->capture_default_str();
    eff->add_option("--target-accuracy", o.criteria.target_train_accuracy, "Stop at this train accuracy")
        ->capture_default_str();
    auto* opt = sub("optimize", "Run stage 1, stage 2 or both", cmd_optimize);
    opt->add_option("--stage", o.stage, "1, 2 or both")->capture_default_str();
    opt->add_option("--resume", o.resume, "Continue from a checkpoint");
    opt->add_option("--from", o.from, "Stage-1 checkpoint that seeds stage 2");
    sub("compare", "Baselines vs optimized distributions", cmd_compare);
    auto* seq = sub("sample-seq", "Sample one training sequence", cmd_sample_seq);
    seq->add_option("--from", o.from, "Optimizer checkpoint");
    seq->add_option("--baseline", o.baseline, "Baseline distribution instead of a checkpoint");
    seq->add_option("--sequence-seed", o.sequence_seed, "Sampling seed")->capture_default_str();
    sub("analyze", "Word-variable correlations with (P + Q) / 2", cmd_analyze)
        ->add_option("--from", o.from, "Optimizer checkpoint");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        return handler(o);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kUsage;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kRuntime;
    }
}
