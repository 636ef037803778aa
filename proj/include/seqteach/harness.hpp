#pragma once

// Experiment orchestration: task preparation, the efficiency sweep, the
// baseline comparison and report emission.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "seqteach/analysis.hpp"
#include "seqteach/learner.hpp"
#include "seqteach/optimizer.hpp"
#include "seqteach/parallel.hpp"
#include "seqteach/schedule.hpp"
#include "seqteach/vocab.hpp"

namespace seqteach {

/// A vocabulary file (plus optional phoneme inventory), or the synthetic
/// generator when `path` is empty.
struct VocabularySource {
    std::string path;
    std::string phonemes;
    SyntheticSpec synthetic{.n_words = 300, .n_consonants = 6, .n_vowel_graphemes = 4};

    friend bool operator==(const VocabularySource&, const VocabularySource&) = default;
};

/// Optimizer settings sized for one machine: T = 1500, 12 directions, 5
/// replicates, 40 steps.
OptimizerConfig desk_optimizer_config();

struct ExperimentConfig {
    VocabularySource vocabulary;
    std::size_t pool_size = 60;
    std::size_t split_reps = 1;  // > 1: keep the split whose batch-trained learner generalizes best
    OptimizerConfig optimizer = desk_optimizer_config();
    std::vector<std::string> baselines{"uniform"};
    std::size_t n_best = 50;
    std::uint64_t seed = 1;

    void validate() const;
    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

/// "uniform", "<column>" or "<column>:inverse".
struct BaselineSpec {
    std::string name;
    std::string kind;
    WeightTransform transform = WeightTransform::identity;
};
BaselineSpec parse_baseline(std::string_view text);

// Seed labels used below master seeds (see derive_seed).
inline constexpr std::uint64_t kVocabularySeedLabel = 0x766f63;
inline constexpr std::uint64_t kSplitSeedLabel = 0x73706c;
inline constexpr std::uint64_t kEvaluationSeedLabel = 0x6576616c;

/// Loads or generates a vocabulary. Rows rejected by the lenient parser are
/// returned alongside.
ParseResult load_vocabulary(const VocabularySource& source, std::uint64_t master_seed);

struct PreparedTask {
    Vocabulary vocab;
    PoolSplit split;
    std::vector<RowError> rejected;

    /// View that borrows `vocab`; keep this object alive while it is used.
    TeachingTask task() const { return TeachingTask{&vocab, split.pool, split.test}; }
};

PreparedTask prepare_task(const ExperimentConfig& config, const Executor& executor);

// ---------------------------------------------------------------------------
// Efficiency sweep

struct EfficiencySettings {
    std::vector<std::size_t> pool_sizes{20, 40, 60, 80, 100};
    std::size_t reps = 10;
    double learning_rate = 0.1;
    ConvergenceCriteria criteria{};
    double init_scale = kDefaultInitScale;
};

struct EfficiencyCell {
    std::size_t pool_size = 0;
    std::size_t reps = 0;
    double mean = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
    std::vector<double> efficiencies;  // c / K per rep
    std::vector<std::size_t> epochs;
    std::size_t best_rep = 0;
    double best_test_accuracy = 0.0;
    PoolSplit best_split;
};

struct EfficiencyReport {
    std::uint64_t seed = 0;
    std::vector<EfficiencyCell> cells;
};

/// Split seed of repetition `rep` at pool size K.
std::uint64_t split_seed(std::uint64_t master_seed, std::size_t pool_size, std::size_t rep);

/// Quantile with linear interpolation between order statistics.
double quantile(std::vector<double> xs, double q);

EfficiencyCell efficiency_cell(const Vocabulary& vocab, std::size_t pool_size, const EfficiencySettings& settings,
                               std::uint64_t master_seed, const Executor& executor);
EfficiencyReport efficiency_experiment(const Vocabulary& vocab, const EfficiencySettings& settings,
                                       std::uint64_t master_seed, const Executor& executor);

// ---------------------------------------------------------------------------
// Comparison

inline constexpr std::string_view kStage1Condition = "Pbar*";
inline constexpr std::string_view kStage2Condition = "(P*,Q*)";

struct ConditionResult {
    std::string name;
    std::vector<double> accuracies;  // one per sampled sequence
    double mean_accuracy = 0.0;
    double std_error = 0.0;
    double best_accuracy = 0.0;
    std::size_t best_index = 0;
    std::optional<TTest> versus_optimized;  // Welch test against (P*,Q*)

    friend bool operator==(const ConditionResult&, const ConditionResult&) = default;
};

struct ComparisonReport {
    nlohmann::json config;  // effective experiment config
    std::size_t vocab_size = 0;
    std::size_t pool_size = 0;
    std::size_t test_size = 0;
    std::size_t n = 0;
    std::vector<ConditionResult> conditions;
    std::vector<CostRecord> stage1_history;
    std::vector<CostRecord> stage2_history;

    const ConditionResult* find(std::string_view name) const;
    friend bool operator==(const ComparisonReport&, const ComparisonReport&) = default;
};

struct ComparisonOutcome {
    ComparisonReport report;
    OptimizerRunState stage1;
    OptimizerRunState stage2;
    /// Per condition, in report order.
    std::vector<TimeVaryingDistribution> distributions;
    std::vector<TrainingSequence> best_sequences;
};

using ProgressFn = std::function<void(const OptimizerRunState&)>;

/// Evaluates one condition on N sampled sequences and keeps the best one.
ConditionResult evaluate_condition(std::string name, const TimeVaryingDistribution& tvd, const TeachingTask& task,
                                   const ExperimentConfig& config, const Executor& executor,
                                   TrainingSequence* best_sequence = nullptr);

/// Baselines, stage one, stage two, then Welch tests against (P*,Q*).
/// With `checkpoint_dir` set, each stage is checkpointed after every step.
ComparisonOutcome run_comparison(const ExperimentConfig& config, const PreparedTask& prepared, const Executor& executor,
                                 const ProgressFn& on_step = {}, const std::filesystem::path& checkpoint_dir = {});

// ---------------------------------------------------------------------------
// Reports

nlohmann::json to_json(const ComparisonReport& report);
ComparisonReport comparison_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EfficiencyReport& report);

std::string comparison_csv(const ComparisonReport& report);
std::string efficiency_csv(const EfficiencyReport& report);
std::string history_csv(const ComparisonReport& report);

/// Bar chart of mean accuracy with stderr bars and a '*' at each
/// condition's best-sequence accuracy. Empty string for an empty report.
std::string comparison_svg(const ComparisonReport& report);
/// Mean efficiency per K with a 25th-75th percentile band.
std::string efficiency_svg(const EfficiencyReport& report);

/// report.json, report.csv, history.csv and accuracy.svg (when nonempty).
void emit_reports(const ComparisonReport& report, const std::filesystem::path& out_dir);
/// efficiency.json, efficiency.csv and efficiency.svg (when nonempty).
void emit_reports(const EfficiencyReport& report, const std::filesystem::path& out_dir);

/// Reports plus per-condition distributions and best sequences.
void emit_comparison_artifacts(const ComparisonOutcome& outcome, const PreparedTask& prepared,
                               const std::filesystem::path& out_dir);

/// Writes the correlation table and word variables for an optimized (P, Q).
void emit_analysis(const Vocabulary& vocab, std::span<const std::size_t> pool, const Multinomial& start,
                   const Multinomial& end, const std::filesystem::path& out_dir);

/// One sampled sequence as "t,word" CSV.
std::string sequence_csv(const TrainingSequence& sequence, const Vocabulary& vocab, std::span<const std::size_t> pool);

}  // namespace seqteach
