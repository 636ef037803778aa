#pragma once

// Zeroth-order optimization of time-varying distributions.
//
// The decision vector z holds free softmax logits: (alpha_1..alpha_{K-1}) in
// stage one, where start and end distributions are tied, and
// (alpha_1..alpha_{K-1}, beta_1..beta_{K-1}) in stage two. Gradients of the
// expected terminal cost are estimated from random-direction finite
// differences and fed to SGD with momentum:
//
//   g      ~ dim/delta * mean_i (l(z + delta v_i) - l(z)) v_i
//   G_{s+1} = gamma G_s + eta g
//   z_{s+1} = z_s - G_{s+1}
//
// Seed lineage: every random stream is derived from
// (master seed, stage, step, direction, replicate) by derive_seed, so results
// never depend on how evaluations are scheduled across workers.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "seqteach/learner.hpp"
#include "seqteach/parallel.hpp"
#include "seqteach/schedule.hpp"
#include "seqteach/vocab.hpp"

namespace seqteach {

enum class LearnerSeedPolicy {
    fixed,          // every evaluation starts from the same x0 (derived from the master seed)
    per_replicate,  // x0 is redrawn per replicate
};

enum class Stage { one = 1, two = 2 };

std::string to_string(LearnerSeedPolicy policy);
LearnerSeedPolicy parse_seed_policy(std::string_view text);

struct OptimizerConfig {
    double eta = 0.01;
    double gamma = 0.9;
    double delta = 0.01;
    std::size_t n_dirs = 20;
    std::size_t n_seq = 5;
    std::size_t n_steps = 40;
    std::size_t horizon = 10000;
    LearnerSeedPolicy learner_seed_policy = LearnerSeedPolicy::fixed;
    bool common_random_numbers = true;
    double init_scale = kDefaultInitScale;
    LearnerHyper learner{};

    /// Throws UsageError on out-of-range values.
    void validate() const;
    friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

/// A noisy scalar objective over R^dim. `replicate_seed` fixes all
/// randomness of one evaluation.
class Objective {
public:
    virtual ~Objective() = default;
    virtual std::size_t dimension() const = 0;
    virtual double evaluate(std::span<const double> z, std::uint64_t replicate_seed) const = 0;
};

/// l(z) = 0.5 * ||z||^2, deterministic. Gradient is z.
class QuadraticObjective final : public Objective {
public:
    explicit QuadraticObjective(std::size_t dim) : dim_(dim) {}
    std::size_t dimension() const override { return dim_; }
    double evaluate(std::span<const double> z, std::uint64_t) const override;

private:
    std::size_t dim_;
};

/// How each evaluation's initial learner is produced.
struct LearnerSetup {
    LearnerSeedPolicy policy = LearnerSeedPolicy::fixed;
    std::uint64_t fixed_seed = 0;
    double init_scale = kDefaultInitScale;
    LearnerHyper hyper{};

    static LearnerSetup from(const OptimizerConfig& config, std::uint64_t master_seed);
};

/// Pool/test view over a vocabulary.
struct TeachingTask {
    const Vocabulary* vocab = nullptr;
    std::vector<std::size_t> pool;
    std::vector<std::size_t> test;

    std::size_t pool_size() const noexcept { return pool.size(); }
};

/// Trains a fresh learner on one sequence drawn from `tvd` and returns the
/// terminal cost on the test set. A zero horizon evaluates the untrained learner.
double sequence_cost(const TeachingTask& task, const TimeVaryingDistribution& tvd, const LearnerSetup& setup,
                     std::uint64_t replicate_seed, TrainingSequence* sequence_out = nullptr);

/// Expected terminal cost of the distribution encoded by z.
class TeachingObjective final : public Objective {
public:
    TeachingObjective(const TeachingTask& task, Stage stage, std::size_t horizon, LearnerSetup setup);

    std::size_t dimension() const override;
    double evaluate(std::span<const double> z, std::uint64_t replicate_seed) const override;

    TimeVaryingDistribution distribution(std::span<const double> z) const;
    Stage stage() const noexcept { return stage_; }

private:
    const TeachingTask& task_;
    Stage stage_;
    std::size_t horizon_;
    LearnerSetup setup_;
};

struct CostEstimate {
    double mean = 0.0;
    double std_error = 0.0;  // sample std / sqrt(n); 0 for n = 1
    std::vector<double> samples;
};

CostEstimate summarize(std::vector<double> samples);

/// Seed of replicate r of evaluation point p within a step. With common
/// random numbers every point shares the replicate seeds.
std::uint64_t replicate_seed(std::uint64_t step_seed, std::size_t point, std::size_t replicate, bool common);
std::uint64_t direction_seed(std::uint64_t step_seed, std::size_t direction);
std::uint64_t lineage_seed(std::uint64_t master_seed, Stage stage, std::size_t step);

/// Mean and standard error over `n_seq` replicate evaluations at z.
CostEstimate estimate_cost(const Objective& objective, std::span<const double> z, std::size_t n_seq,
                           std::uint64_t step_seed, const Executor& executor);

/// expected_terminal_cost: the mean/stderr of the terminal cost under z.
CostEstimate expected_terminal_cost(std::span<const double> z, const TeachingTask& task, Stage stage,
                                    const OptimizerConfig& config, std::uint64_t master_seed, std::uint64_t seed,
                                    const Executor& executor);

/// Standard-normal vector scaled to unit L2 norm.
std::vector<double> sample_unit_vector(std::size_t dim, std::uint64_t seed);

struct GradientEstimate {
    std::vector<double> gradient;
    CostEstimate baseline;  // l(z), evaluated once and shared by all directions
};

/// Finite-difference estimator with caller-provided unit directions.
GradientEstimate estimate_gradient_along(const Objective& objective, std::span<const double> z,
                                         std::span<const std::vector<double>> directions, double delta,
                                         std::size_t n_seq, bool common_random_numbers, std::uint64_t step_seed,
                                         const Executor& executor);

/// Finite-difference estimator with `config.n_dirs` random unit directions.
GradientEstimate estimate_gradient(const Objective& objective, std::span<const double> z, const OptimizerConfig& config,
                                   std::uint64_t step_seed, const Executor& executor);

struct CostRecord {
    std::size_t step = 0;
    double mean = 0.0;
    double std_error = 0.0;

    friend bool operator==(const CostRecord&, const CostRecord&) = default;
};

struct OptimizerRunState {
    Stage stage = Stage::one;
    OptimizerConfig config;
    std::uint64_t master_seed = 0;
    std::size_t step = 0;
    std::vector<double> z;
    std::vector<double> gamma_buf;
    std::vector<CostRecord> history;  // one entry per evaluated iterate z_0 .. z_S
    std::vector<double> best_z;
    double best_mean = 0.0;

    bool finished() const noexcept { return step >= config.n_steps && history.size() == config.n_steps + 1; }
    friend bool operator==(const OptimizerRunState&, const OptimizerRunState&) = default;
};

OptimizerRunState make_run_state(Stage stage, const OptimizerConfig& config, std::uint64_t master_seed,
                                 std::vector<double> z0);

/// In-place momentum update. Throws ComputeError (state untouched) when the
/// gradient is not finite and UsageError when shapes differ.
void sgd_step_inplace(OptimizerRunState& state, std::span<const double> gradient);
OptimizerRunState sgd_step(OptimizerRunState state, std::span<const double> gradient);

/// Called after every completed step and after the final evaluation.
using StepCallback = std::function<void(const OptimizerRunState&)>;

/// Runs (or resumes) the optimizer loop until `finished()`.
void run_optimizer(OptimizerRunState& state, const Objective& objective, const Executor& executor,
                   const StepCallback& on_step = {});

struct Stage1Result {
    Multinomial p_bar;
    OptimizerRunState run;
};

struct Stage2Result {
    Multinomial start;
    Multinomial end;
    OptimizerRunState run;
};

/// Stage one: P = Q, started from the uniform distribution.
Stage1Result optimize_stage1(const TeachingTask& task, const OptimizerConfig& config, std::uint64_t master_seed,
                             const Executor& executor, const StepCallback& on_step = {});

/// Stage two: (P, Q) started from (p_bar, p_bar).
Stage2Result optimize_stage2(const Multinomial& p_bar, const TeachingTask& task, const OptimizerConfig& config,
                             std::uint64_t master_seed, const Executor& executor, const StepCallback& on_step = {});

/// Continues a checkpointed stage.
void resume_stage(OptimizerRunState& state, const TeachingTask& task, const Executor& executor,
                  const StepCallback& on_step = {});

/// Decodes the best iterate of a finished or partial run.
TimeVaryingDistribution best_distribution(const OptimizerRunState& state, std::size_t pool_size);

struct BestSequence {
    TrainingSequence sequence;
    double cost = 0.0;
    std::size_t index = 0;  // replicate that produced it
    CostEstimate summary;   // over all N sampled sequences
};

/// Samples N sequences, trains a learner on each and keeps the lowest-cost one.
BestSequence select_best_sequence(const TimeVaryingDistribution& tvd, const TeachingTask& task, std::size_t n,
                                  const LearnerSetup& setup, std::uint64_t seed, const Executor& executor);

}  // namespace seqteach
