#include "seqteach/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "seqteach/error.hpp"
#include "seqteach/random.hpp"

namespace seqteach {

namespace {

// Stream labels inside a step.
constexpr std::uint64_t kReplicateStream = 0xa1;
constexpr std::uint64_t kDirectionStream = 0xd1;
constexpr std::uint64_t kSequenceStream = 0x5e;
constexpr std::uint64_t kLearnerStream = 0x1e;
constexpr std::uint64_t kFixedLearnerStream = 0xf1;
constexpr std::uint64_t kSelectionStream = 0xbe;

void record_cost(OptimizerRunState& state, const CostEstimate& cost) {
    const bool first = state.history.empty();
    state.history.push_back(CostRecord{state.step, cost.mean, cost.std_error});
    if (first || cost.mean < state.best_mean) {
        state.best_mean = cost.mean;
        state.best_z = state.z;
    }
}

}  // namespace

std::string to_string(LearnerSeedPolicy policy) {
    return policy == LearnerSeedPolicy::fixed ? "fixed" : "per_replicate";
}

LearnerSeedPolicy parse_seed_policy(std::string_view text) {
    if (text == "fixed") return LearnerSeedPolicy::fixed;
    if (text == "per_replicate") return LearnerSeedPolicy::per_replicate;
    throw UsageError("learner seed policy must be 'fixed' or 'per_replicate', got '" + std::string(text) + "'");
}

void OptimizerConfig::validate() const {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw UsageError("eta must be > 0");
    if (!(delta > 0.0) || !std::isfinite(delta)) throw UsageError("delta must be > 0");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw UsageError("gamma must lie in [0, 1)");
    if (n_dirs < 1) throw UsageError("n_dirs must be >= 1");
    if (n_seq < 1) throw UsageError("n_seq must be >= 1");
    if (!(init_scale >= 0.0)) throw UsageError("init_scale must be >= 0");
    if (!(learner.learning_rate > 0.0)) throw UsageError("learner learning rate must be > 0");
    if (!(learner.momentum >= 0.0 && learner.momentum < 1.0)) throw UsageError("learner momentum must lie in [0, 1)");
}

double QuadraticObjective::evaluate(std::span<const double> z, std::uint64_t) const {
    double s = 0.0;
    for (double x : z) s += x * x;
    return 0.5 * s;
}

LearnerSetup LearnerSetup::from(const OptimizerConfig& config, std::uint64_t master_seed) {
    return LearnerSetup{config.learner_seed_policy, derive_seed(master_seed, {kFixedLearnerStream}), config.init_scale,
                        config.learner};
}

double sequence_cost(const TeachingTask& task, const TimeVaryingDistribution& tvd, const LearnerSetup& setup,
                     std::uint64_t seed, TrainingSequence* sequence_out) {
    const std::uint64_t learner_seed =
        setup.policy == LearnerSeedPolicy::fixed ? setup.fixed_seed : derive_seed(seed, {kLearnerStream});
    LearnerState learner = init_learner(learner_seed, setup.init_scale, LearnerShape{}, setup.hyper);
    TrainingSequence seq;
    seq.seed = derive_seed(seed, {kSequenceStream});
    if (tvd.horizon > 0) {
        seq = sample_sequence(tvd, seq.seed);
        train_sequence(learner, task.vocab->items(), task.pool, seq.items);
    }
    const double cost = terminal_cost(learner, task.vocab->items(), task.test, task.vocab->inventory());
    if (sequence_out) *sequence_out = std::move(seq);
    return cost;
}

TeachingObjective::TeachingObjective(const TeachingTask& task, Stage stage, std::size_t horizon, LearnerSetup setup)
    : task_(task), stage_(stage), horizon_(horizon), setup_(setup) {
    if (task.vocab == nullptr || task.pool.size() < 2) throw UsageError("teaching objective needs a pool of >= 2 items");
    if (task.test.empty()) throw UsageError("teaching objective needs a nonempty test set");
}

std::size_t TeachingObjective::dimension() const {
    const std::size_t k = task_.pool_size();
    return stage_ == Stage::one ? k - 1 : 2 * (k - 1);
}

TimeVaryingDistribution TeachingObjective::distribution(std::span<const double> z) const {
    const std::size_t k = task_.pool_size();
    if (z.size() != dimension()) throw UsageError("z has the wrong dimension for this stage");
    if (stage_ == Stage::one) {
        return stationary(logits_to_multinomial(z), horizon_);
    }
    return TimeVaryingDistribution(logits_to_multinomial(z.first(k - 1)), logits_to_multinomial(z.subspan(k - 1)),
                                   horizon_);
}

double TeachingObjective::evaluate(std::span<const double> z, std::uint64_t seed) const {
    return sequence_cost(task_, distribution(z), setup_, seed);
}

CostEstimate summarize(std::vector<double> samples) {
    CostEstimate c;
    const auto n = static_cast<double>(samples.size());
    if (!samples.empty()) {
        c.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
        if (samples.size() > 1) {
            double ss = 0.0;
            for (double x : samples) ss += (x - c.mean) * (x - c.mean);
            c.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
        }
    }
    c.samples = std::move(samples);
    return c;
}

std::uint64_t replicate_seed(std::uint64_t step_seed, std::size_t point, std::size_t replicate, bool common) {
    return common ? derive_seed(step_seed, {kReplicateStream, replicate})
                  : derive_seed(step_seed, {kReplicateStream, replicate, point});
}

std::uint64_t direction_seed(std::uint64_t step_seed, std::size_t direction) {
    return derive_seed(step_seed, {kDirectionStream, direction});
}

std::uint64_t lineage_seed(std::uint64_t master_seed, Stage stage, std::size_t step) {
    return derive_seed(master_seed, {static_cast<std::uint64_t>(stage), step});
}

CostEstimate estimate_cost(const Objective& objective, std::span<const double> z, std::size_t n_seq,
                           std::uint64_t step_seed, const Executor& executor) {
    if (n_seq < 1) throw UsageError("need at least one replicate");
    std::vector<double> costs(n_seq);
    executor.for_each_index(n_seq, [&](std::size_t r) {
        costs[r] = objective.evaluate(z, replicate_seed(step_seed, 0, r, true));
    });
    return summarize(std::move(costs));
}

CostEstimate expected_terminal_cost(std::span<const double> z, const TeachingTask& task, Stage stage,
                                    const OptimizerConfig& config, std::uint64_t master_seed, std::uint64_t seed,
                                    const Executor& executor) {
    const TeachingObjective objective(task, stage, config.horizon, LearnerSetup::from(config, master_seed));
    return estimate_cost(objective, z, config.n_seq, seed, executor);
}

std::vector<double> sample_unit_vector(std::size_t dim, std::uint64_t seed) {
    if (dim < 1) throw UsageError("unit vector dimension must be >= 1");
    Rng rng(seed);
    std::vector<double> v(dim);
    for (;;) {
        double norm2 = 0.0;
        for (auto& x : v) {
            x = rng.normal();
            norm2 += x * x;
        }
        if (norm2 > 0.0) {
            const double inv = 1.0 / std::sqrt(norm2);
            for (auto& x : v) x *= inv;
            return v;
        }
    }
}

GradientEstimate estimate_gradient_along(const Objective& objective, std::span<const double> z,
                                         std::span<const std::vector<double>> directions, double delta,
                                         std::size_t n_seq, bool common, std::uint64_t step_seed,
                                         const Executor& executor) {
    const std::size_t dim = z.size();
    if (dim != objective.dimension()) throw UsageError("z does not match the objective's dimension");
    if (!(delta > 0.0)) throw UsageError("delta must be > 0");
    if (directions.empty()) throw UsageError("need at least one direction");
    for (const auto& v : directions) {
        if (v.size() != dim) throw UsageError("direction has the wrong dimension");
    }

    const std::size_t points = directions.size() + 1;
    std::vector<double> costs(points * n_seq);
    executor.for_each_index(costs.size(), [&](std::size_t task) {
        const std::size_t p = task / n_seq;
        const std::size_t r = task % n_seq;
        const std::uint64_t seed = replicate_seed(step_seed, p, r, common);
        if (p == 0) {
            costs[task] = objective.evaluate(z, seed);
        } else {
            const auto& v = directions[p - 1];
            std::vector<double> shifted(z.begin(), z.end());
            for (std::size_t i = 0; i < dim; ++i) shifted[i] += delta * v[i];
            costs[task] = objective.evaluate(shifted, seed);
        }
    });

    auto mean_of = [&](std::size_t p) {
        double s = 0.0;
        for (std::size_t r = 0; r < n_seq; ++r) s += costs[p * n_seq + r];
        return s / static_cast<double>(n_seq);
    };

    GradientEstimate est;
    est.baseline = summarize(std::vector<double>(costs.begin(), costs.begin() + static_cast<std::ptrdiff_t>(n_seq)));
    const double base = mean_of(0);
    est.gradient.assign(dim, 0.0);
    for (std::size_t d = 0; d < directions.size(); ++d) {
        const double diff = mean_of(d + 1) - base;
        if (diff == 0.0) continue;
        for (std::size_t i = 0; i < dim; ++i) est.gradient[i] += diff * directions[d][i];
    }
    const double scale = static_cast<double>(dim) / (delta * static_cast<double>(directions.size()));
    for (auto& g : est.gradient) g *= scale;
    return est;
}

GradientEstimate estimate_gradient(const Objective& objective, std::span<const double> z, const OptimizerConfig& config,
                                   std::uint64_t step_seed, const Executor& executor) {
    std::vector<std::vector<double>> directions(config.n_dirs);
    for (std::size_t d = 0; d < config.n_dirs; ++d) {
        directions[d] = sample_unit_vector(z.size(), direction_seed(step_seed, d));
    }
    return estimate_gradient_along(objective, z, directions, config.delta, config.n_seq,
                                   config.common_random_numbers, step_seed, executor);
}

OptimizerRunState make_run_state(Stage stage, const OptimizerConfig& config, std::uint64_t master_seed,
                                 std::vector<double> z0) {
    config.validate();
    OptimizerRunState s;
    s.stage = stage;
    s.config = config;
    s.master_seed = master_seed;
    s.gamma_buf.assign(z0.size(), 0.0);
    s.z = std::move(z0);
    return s;
}

void sgd_step_inplace(OptimizerRunState& state, std::span<const double> gradient) {
    if (gradient.size() != state.z.size() || state.gamma_buf.size() != state.z.size()) {
        throw UsageError("gradient shape does not match z");
    }
    for (double g : gradient) {
        if (!std::isfinite(g)) throw ComputeError("non-finite gradient; step aborted");
    }
    const double gamma = state.config.gamma;
    const double eta = state.config.eta;
    for (std::size_t i = 0; i < state.z.size(); ++i) {
        state.gamma_buf[i] = gamma * state.gamma_buf[i] + eta * gradient[i];
        state.z[i] -= state.gamma_buf[i];
    }
    ++state.step;
}

OptimizerRunState sgd_step(OptimizerRunState state, std::span<const double> gradient) {
    sgd_step_inplace(state, gradient);
    return state;
}

void run_optimizer(OptimizerRunState& state, const Objective& objective, const Executor& executor,
                   const StepCallback& on_step) {
    if (state.z.size() != objective.dimension()) throw UsageError("run state does not match the objective");
    if (state.finished()) return;
    if (state.history.size() != state.step) {
        throw DataError("run state history has " + std::to_string(state.history.size()) + " entries at step " +
                        std::to_string(state.step));
    }
    while (state.step < state.config.n_steps) {
        const auto est = estimate_gradient(objective, state.z, state.config,
                                           lineage_seed(state.master_seed, state.stage, state.step), executor);
        OptimizerRunState next = state;
        record_cost(next, est.baseline);
        sgd_step_inplace(next, est.gradient);
        state = std::move(next);
        if (on_step) on_step(state);
    }
    if (state.history.size() == state.config.n_steps) {
        const auto cost = estimate_cost(objective, state.z, state.config.n_seq,
                                        lineage_seed(state.master_seed, state.stage, state.step), executor);
        record_cost(state, cost);
        if (on_step) on_step(state);
    }
}

Stage1Result optimize_stage1(const TeachingTask& task, const OptimizerConfig& config, std::uint64_t master_seed,
                             const Executor& executor, const StepCallback& on_step) {
    const std::size_t k = task.pool_size();
    if (k < 2) throw UsageError("optimization needs a pool of >= 2 items");
    OptimizerRunState state = make_run_state(Stage::one, config, master_seed, std::vector<double>(k - 1, 1.0));
    resume_stage(state, task, executor, on_step);
    return Stage1Result{logits_to_multinomial(state.best_z), std::move(state)};
}

Stage2Result optimize_stage2(const Multinomial& p_bar, const TeachingTask& task, const OptimizerConfig& config,
                             std::uint64_t master_seed, const Executor& executor, const StepCallback& on_step) {
    const std::size_t k = task.pool_size();
    if (p_bar.size() != k) throw UsageError("stage-one distribution does not match the pool");
    auto alpha = multinomial_to_logits(p_bar);
    std::vector<double> z0 = alpha;
    z0.insert(z0.end(), alpha.begin(), alpha.end());
    OptimizerRunState state = make_run_state(Stage::two, config, master_seed, std::move(z0));
    resume_stage(state, task, executor, on_step);
    auto tvd = best_distribution(state, k);
    return Stage2Result{std::move(tvd.start), std::move(tvd.end), std::move(state)};
}

void resume_stage(OptimizerRunState& state, const TeachingTask& task, const Executor& executor,
                  const StepCallback& on_step) {
    state.config.validate();
    const TeachingObjective objective(task, state.stage, state.config.horizon,
                                      LearnerSetup::from(state.config, state.master_seed));
    run_optimizer(state, objective, executor, on_step);
}

TimeVaryingDistribution best_distribution(const OptimizerRunState& state, std::size_t pool_size) {
    const auto& z = state.best_z.empty() ? state.z : state.best_z;
    if (state.stage == Stage::one) {
        if (z.size() != pool_size - 1) throw UsageError("run state does not match the pool");
        return stationary(logits_to_multinomial(z), state.config.horizon);
    }
    if (z.size() != 2 * (pool_size - 1)) throw UsageError("run state does not match the pool");
    const std::span<const double> zs(z);
    return TimeVaryingDistribution(logits_to_multinomial(zs.first(pool_size - 1)),
                                   logits_to_multinomial(zs.subspan(pool_size - 1)), state.config.horizon);
}

BestSequence select_best_sequence(const TimeVaryingDistribution& tvd, const TeachingTask& task, std::size_t n,
                                  const LearnerSetup& setup, std::uint64_t seed, const Executor& executor) {
    if (n < 1) throw UsageError("best-sequence selection needs N >= 1");
    std::vector<double> costs(n);
    executor.for_each_index(n, [&](std::size_t r) {
        costs[r] = sequence_cost(task, tvd, setup, derive_seed(seed, {kSelectionStream, r}));
    });
    const auto best = static_cast<std::size_t>(std::min_element(costs.begin(), costs.end()) - costs.begin());
    BestSequence result;
    result.index = best;
    result.cost = sequence_cost(task, tvd, setup, derive_seed(seed, {kSelectionStream, best}), &result.sequence);
    result.summary = summarize(std::move(costs));
    return result;
}

}  // namespace seqteach
