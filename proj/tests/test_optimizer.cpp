#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "seqteach/error.hpp"
#include "seqteach/optimizer.hpp"
#include "seqteach/random.hpp"

using namespace seqteach;

namespace {

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    return ab / std::sqrt(aa * bb);
}

double norm(const std::vector<double>& a) { return std::sqrt(std::inner_product(a.begin(), a.end(), a.begin(), 0.0)); }

// Records every seed it is evaluated with.
class SeedProbe final : public Objective {
public:
    explicit SeedProbe(std::size_t dim) : dim_(dim) {}
    std::size_t dimension() const override { return dim_; }
    double evaluate(std::span<const double> z, std::uint64_t seed) const override {
        return static_cast<double>(seed % 1000) * 1e-3 + z[0];
    }

private:
    std::size_t dim_;
};

// Returns costs from a fixed script, ignoring z.
class Scripted final : public Objective {
public:
    std::size_t dimension() const override { return 2; }
    double evaluate(std::span<const double> z, std::uint64_t) const override { return z[0] * z[0] + z[1] * z[1]; }
};

struct SmallTask {
    Vocabulary vocab = generate_synthetic_vocabulary(SyntheticSpec{.n_words = 60, .n_consonants = 6, .n_vowel_graphemes = 4}, 1);
    PoolSplit split = split_vocabulary(vocab.size(), 8, 2);
    TeachingTask task() const { return TeachingTask{&vocab, split.pool, split.test}; }
};

OptimizerConfig tiny_config() {
    OptimizerConfig c;
    c.horizon = 60;
    c.n_dirs = 3;
    c.n_seq = 2;
    c.n_steps = 3;
    return c;
}

}  // namespace

TEST_CASE("config validation") {
    OptimizerConfig c;
    CHECK_NOTHROW(c.validate());
    c.eta = 0;
    CHECK_THROWS_AS(c.validate(), UsageError);
    c = {};
    c.gamma = 1.0;
    CHECK_THROWS_AS(c.validate(), UsageError);
    c = {};
    c.n_dirs = 0;
    CHECK_THROWS_AS(c.validate(), UsageError);
    CHECK(parse_seed_policy(to_string(LearnerSeedPolicy::per_replicate)) == LearnerSeedPolicy::per_replicate);
    CHECK_THROWS_AS(parse_seed_policy("sometimes"), UsageError);
}

TEST_CASE("unit directions") {
    const auto v = sample_unit_vector(37, 5);
    CHECK(norm(v) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(sample_unit_vector(37, 5) == v);
    CHECK_THROWS_AS(sample_unit_vector(0, 5), UsageError);
}

TEST_CASE("estimator is unbiased on the quadratic") {
    const QuadraticObjective quad(6);
    std::vector<double> z(6, 0.0);
    z[0] = 1.0;
    OptimizerConfig c;
    c.n_dirs = 100000;
    c.n_seq = 1;
    const auto est = estimate_gradient(quad, z, c, 77, Executor(1));
    CHECK(cosine(est.gradient, z) >= 0.99);
    CHECK(std::abs(norm(est.gradient) - 1.0) <= 0.05);
    CHECK(est.baseline.mean == doctest::Approx(0.5));
}

TEST_CASE("estimator with a single direction is the scaled difference") {
    const QuadraticObjective quad(3);
    const std::vector<double> z{1.0, 2.0, -1.0};
    const std::vector<std::vector<double>> dirs{{0.0, 1.0, 0.0}};
    const auto est = estimate_gradient_along(quad, z, dirs, 0.01, 1, true, 3, Executor(1));
    const double diff = 0.5 * (1 + 2.01 * 2.01 + 1) - 0.5 * 6.0;
    CHECK(est.gradient[1] == doctest::Approx(3.0 * diff / 0.01).epsilon(1e-12));
    CHECK(est.gradient[0] == 0.0);
    CHECK_THROWS_AS(estimate_gradient_along(quad, z, std::vector<std::vector<double>>{}, 0.01, 1, true, 3, Executor(1)),
                    UsageError);
}

TEST_CASE("common random numbers share replicate seeds across points") {
    CHECK(replicate_seed(9, 0, 2, true) == replicate_seed(9, 5, 2, true));
    CHECK(replicate_seed(9, 0, 2, false) != replicate_seed(9, 5, 2, false));
    CHECK(replicate_seed(9, 0, 1, true) != replicate_seed(9, 0, 2, true));
    CHECK(lineage_seed(1, Stage::one, 3) != lineage_seed(1, Stage::two, 3));

    // With a seed-driven objective that is flat in z[1..], CRN cancels the noise exactly.
    const SeedProbe probe(2);
    const std::vector<double> z{0.0, 0.0};
    const std::vector<std::vector<double>> dirs{{0.0, 1.0}};
    const auto crn = estimate_gradient_along(probe, z, dirs, 0.01, 4, true, 11, Executor(1));
    CHECK(crn.gradient[1] == 0.0);
    const auto indep = estimate_gradient_along(probe, z, dirs, 0.01, 4, false, 11, Executor(1));
    CHECK(indep.gradient[1] != 0.0);
}

TEST_CASE("momentum update") {
    OptimizerConfig c;
    auto s = make_run_state(Stage::one, c, 1, std::vector<double>(3, 0.0));
    const std::vector<double> g{1.0, 0.0, 0.0};
    s = sgd_step(s, g);
    CHECK(s.z[0] == doctest::Approx(-0.01));
    CHECK(s.step == 1);
    s = sgd_step(s, g);
    s = sgd_step(s, g);
    CHECK(s.z[0] == doctest::Approx(-0.01 * (1 + 1.9 + 2.71)).epsilon(1e-14));

    const std::vector<double> bad{1.0, NAN, 0.0};
    const auto before = s;
    CHECK_THROWS_AS(sgd_step_inplace(s, bad), ComputeError);
    CHECK(s == before);
    CHECK_THROWS_AS(sgd_step_inplace(s, std::vector<double>{1.0}), UsageError);
}

TEST_CASE("scripted gradients follow the hand-unrolled recurrence") {
    OptimizerConfig c;
    c.eta = 0.05;
    c.gamma = 0.8;
    auto s = make_run_state(Stage::one, c, 1, {0.3, -0.2});
    double z0 = 0.3, z1 = -0.2, g0 = 0.0, g1 = 0.0;
    for (int t = 0; t < 100; ++t) {
        const std::vector<double> g{std::sin(t * 0.3), std::cos(t * 0.7) * 2.0};
        sgd_step_inplace(s, g);
        g0 = 0.8 * g0 + 0.05 * g[0];
        g1 = 0.8 * g1 + 0.05 * g[1];
        z0 -= g0;
        z1 -= g1;
    }
    CHECK(std::abs(s.z[0] - z0) <= 1e-12);
    CHECK(std::abs(s.z[1] - z1) <= 1e-12);
}

TEST_CASE("optimizer loop records S + 1 costs and keeps the best iterate") {
    OptimizerConfig c;
    c.n_steps = 25;
    c.n_dirs = 4;
    c.n_seq = 1;
    c.eta = 0.2;
    c.gamma = 0.5;
    auto s = make_run_state(Stage::one, c, 3, {1.0, -1.0});
    const Scripted obj;
    std::size_t calls = 0;
    run_optimizer(s, obj, Executor(1), [&](const OptimizerRunState&) { ++calls; });
    CHECK(s.finished());
    CHECK(s.history.size() == 26);
    CHECK(calls == 26);
    for (std::size_t i = 0; i < s.history.size(); ++i) CHECK(s.history[i].step == i);
    double best = s.history[0].mean;
    for (const auto& h : s.history) best = std::min(best, h.mean);
    CHECK(s.best_mean == best);
    CHECK(obj.evaluate(s.best_z, 0) == best);
    CHECK(s.history.back().mean < s.history.front().mean);

    auto again = s;
    run_optimizer(again, obj, Executor(1));
    CHECK(again == s);
}

TEST_CASE("teaching objective") {
    SmallTask t;
    const auto task = t.task();
    const auto setup = LearnerSetup::from(tiny_config(), 4);
    const TeachingObjective one(task, Stage::one, 60, setup);
    const TeachingObjective two(task, Stage::two, 60, setup);
    CHECK(one.dimension() == 7);
    CHECK(two.dimension() == 14);
    CHECK_THROWS_AS(one.evaluate(std::vector<double>(14, 1.0), 1), UsageError);

    const std::vector<double> z(7, 1.0);
    const double c = one.evaluate(z, 5);
    CHECK(c >= 0.0);
    CHECK(c <= 1.0);
    CHECK(one.evaluate(z, 5) == c);

    // Stage two from (alpha, alpha) is the same stationary distribution.
    std::vector<double> z2(z);
    z2.insert(z2.end(), z.begin(), z.end());
    CHECK(two.evaluate(z2, 5) == c);

    const TeachingObjective untrained(task, Stage::one, 0, setup);
    const auto learner = init_learner(setup.fixed_seed, setup.init_scale);
    CHECK(untrained.evaluate(z, 1) == terminal_cost(learner, t.vocab.items(), task.test, t.vocab.inventory()));
}

TEST_CASE("gradient estimates do not depend on the worker count") {
    SmallTask t;
    const auto task = t.task();
    const auto config = tiny_config();
    const TeachingObjective obj(task, Stage::two, config.horizon, LearnerSetup::from(config, 2));
    const std::vector<double> z(14, 0.5);
    const auto a = estimate_gradient(obj, z, config, 99, Executor(1));
    const auto b = estimate_gradient(obj, z, config, 99, Executor(3));
    CHECK(a.gradient == b.gradient);
    CHECK(a.baseline.samples == b.baseline.samples);
}

TEST_CASE("two-stage optimization") {
    SmallTask t;
    const auto task = t.task();
    const auto config = tiny_config();
    const auto r1 = optimize_stage1(task, config, 6, Executor(1));
    CHECK(r1.run.history.size() == config.n_steps + 1);
    CHECK(r1.p_bar.size() == 8);
    CHECK(r1.p_bar == logits_to_multinomial(r1.run.best_z));

    const auto r2 = optimize_stage2(r1.p_bar, task, config, 6, Executor(2));
    CHECK(r2.run.z.size() == 14);
    CHECK(r2.run.history.size() == config.n_steps + 1);
    const auto tvd = best_distribution(r2.run, 8);
    CHECK(tvd.start == r2.start);
    CHECK(tvd.end == r2.end);

    // The first evaluation of stage two is the stage-one optimum.
    const auto x = r2.run.history.front();
    const auto direct = expected_terminal_cost(
        [&] {
            auto a = multinomial_to_logits(r1.p_bar);
            auto z = a;
            z.insert(z.end(), a.begin(), a.end());
            return z;
        }(),
        task, Stage::two, config, 6, lineage_seed(6, Stage::two, 0), Executor(1));
    CHECK(x.mean == doctest::Approx(direct.mean).epsilon(1e-12));
}

TEST_CASE("best-sequence selection") {
    SmallTask t;
    const auto task = t.task();
    const auto setup = LearnerSetup::from(tiny_config(), 1);
    const auto tvd = stationary(Multinomial::uniform(8), 60);
    const auto best = select_best_sequence(tvd, task, 10, setup, 3, Executor(2));
    CHECK(best.summary.samples.size() == 10);
    CHECK(best.cost <= best.summary.mean);
    CHECK(best.cost == best.summary.samples[best.index]);
    CHECK(best.sequence.items.size() == 60);

    LearnerState learner = init_learner(setup.fixed_seed, setup.init_scale);
    train_sequence(learner, t.vocab.items(), task.pool, best.sequence.items);
    CHECK(terminal_cost(learner, t.vocab.items(), task.test, t.vocab.inventory()) == best.cost);
    CHECK_THROWS_AS(select_best_sequence(tvd, task, 0, setup, 3, Executor(1)), UsageError);
}

TEST_CASE("per-replicate learner seeds vary the initial network") {
    SmallTask t;
    auto config = tiny_config();
    config.learner_seed_policy = LearnerSeedPolicy::per_replicate;
    const auto setup = LearnerSetup::from(config, 1);
    const auto tvd = stationary(Multinomial::one_hot(8, 0), 1);
    std::set<double> costs;
    for (std::uint64_t s = 0; s < 20; ++s) costs.insert(sequence_cost(t.task(), tvd, setup, s));
    CHECK(costs.size() >= 2);
    TrainingSequence a, b;
    sequence_cost(t.task(), tvd, setup, 1, &a);
    sequence_cost(t.task(), tvd, setup, 1, &b);
    CHECK(a.items == b.items);
}
