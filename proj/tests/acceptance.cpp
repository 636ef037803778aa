// Acceptance checks. Prints one PASS/FAIL line per criterion, preceded by the
// measurements behind it.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oracles.hpp"
#include "seqteach/analysis.hpp"
#include "seqteach/harness.hpp"
#include "seqteach/io.hpp"
#include "seqteach/learner.hpp"
#include "seqteach/optimizer.hpp"
#include "seqteach/random.hpp"
#include "seqteach/schedule.hpp"
#include "seqteach/vocab.hpp"

using namespace seqteach;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string summary;
};

void detail(const char* fmt, auto... args) {
    std::printf("    ");
    std::printf(fmt, args...);
    std::printf("\n");
    std::fflush(stdout);
}

std::string format(const char* fmt, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    return buf;
}

// 1 ------------------------------------------------------------------------

Outcome gradient_correctness() {
    const auto t0 = Clock::now();
    const auto check = oracle::check_gradient(LearnerShape{6, 5, 4}, 2024, 50);
    const double elapsed = seconds_since(t0);
    return {check.max_relative_error <= 1e-4 && elapsed < 1.0,
            format("max relative error %.2e over %zu coordinates (<= 1e-4), %.3f s (< 1 s)", check.max_relative_error,
                   check.coordinates, elapsed)};
}

// 2 ------------------------------------------------------------------------

Outcome estimator_validity() {
    const auto t0 = Clock::now();
    const QuadraticObjective quad(6);
    const std::vector<double> z{1.0, -0.5, 0.25, 0.0, 2.0, -1.0};
    OptimizerConfig c;
    c.delta = 0.01;
    c.n_dirs = 100000;
    c.n_seq = 1;
    const auto est = estimate_gradient(quad, z, c, 31337, Executor(1));
    const double elapsed = seconds_since(t0);
    double dot = 0, gg = 0, zz = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        dot += est.gradient[i] * z[i];
        gg += est.gradient[i] * est.gradient[i];
        zz += z[i] * z[i];
    }
    const double cosine = dot / std::sqrt(gg * zz);
    const double norm_err = std::abs(std::sqrt(gg) - std::sqrt(zz)) / std::sqrt(zz);
    return {cosine >= 0.99 && norm_err <= 0.05 && elapsed < 10.0,
            format("cosine %.5f (>= 0.99), relative norm error %.4f (<= 0.05), %.2f s (< 10 s)", cosine, norm_err,
                   elapsed)};
}

// 3 ------------------------------------------------------------------------

Outcome update_rule() {
    OptimizerConfig c;
    const std::size_t dim = 5;
    Rng rng(3);
    std::vector<double> z0(dim);
    for (auto& x : z0) x = rng.uniform(-1, 1);
    auto state = make_run_state(Stage::one, c, 1, z0);
    std::vector<double> z = z0, buf(dim, 0.0);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        std::vector<double> g(dim);
        for (auto& x : g) x = rng.normal() * 3.0;
        sgd_step_inplace(state, g);
        for (std::size_t i = 0; i < dim; ++i) {
            buf[i] = 0.9 * buf[i] + 0.01 * g[i];
            z[i] -= buf[i];
            worst = std::max(worst, std::abs(z[i] - state.z[i]));
        }
    }
    return {worst <= 1e-12, format("max trajectory deviation %.2e over 100 steps (<= 1e-12)", worst)};
}

// 4 ------------------------------------------------------------------------

Outcome distribution_laws() {
    constexpr std::size_t K = 10, T = 1000000;
    Rng rng(44);
    std::vector<double> a(K - 1), b(K - 1);
    for (auto& x : a) x = rng.uniform(-2, 2);
    for (auto& x : b) x = rng.uniform(-2, 2);
    const auto p = logits_to_multinomial(a), q = logits_to_multinomial(b);
    const TimeVaryingDistribution tvd(p, q, T);

    const bool endpoints = tvd.at(0) == p && tvd.at(T) == q;
    bool envelope = true;
    for (std::size_t t = 0; t <= T; t += 997) {
        const auto r = tvd.at(t);
        for (std::size_t i = 0; i < K; ++i) {
            envelope = envelope && r[i] >= std::min(p[i], q[i]) && r[i] <= std::max(p[i], q[i]);
        }
    }

    // Whole-sequence counts against the summed R_t, and 10^6 draws at a fixed t.
    const auto seq = sample_sequence(tvd, 8);
    std::vector<double> counts(K, 0.0), expected(K, 0.0), var(K, 0.0);
    for (auto u : seq.items) counts[u] += 1;
    for (std::size_t t = 0; t < T; ++t) {
        const double w = static_cast<double>(t) / T;
        for (std::size_t i = 0; i < K; ++i) {
            const double r = (1 - w) * p[i] + w * q[i];
            expected[i] += r;
            var[i] += r * (1 - r);
        }
    }
    double worst_sigma = 0.0;
    for (std::size_t i = 0; i < K; ++i) worst_sigma = std::max(worst_sigma, std::abs(counts[i] - expected[i]) / std::sqrt(var[i]));

    const auto mid = tvd.at(T / 3);
    std::vector<double> mid_counts(K, 0.0);
    Rng draws(9);
    for (std::size_t n = 0; n < T; ++n) mid_counts[draw_categorical(mid.probs(), draws.uniform())] += 1;
    for (std::size_t i = 0; i < K; ++i) {
        const double sd = std::sqrt(T * mid[i] * (1 - mid[i]));
        worst_sigma = std::max(worst_sigma, std::abs(mid_counts[i] - T * mid[i]) / sd);
    }
    return {endpoints && envelope && worst_sigma <= 4.0,
            format("R_0 = P and R_T = Q exactly: %s, envelope holds: %s, worst deviation %.2f sigma (<= 4)",
                   endpoints ? "yes" : "no", envelope ? "yes" : "no", worst_sigma)};
}

// 5 ------------------------------------------------------------------------

Outcome decoder() {
    const auto vocab = generate_synthetic_vocabulary(SyntheticSpec{}, 5);
    const auto& inv = vocab.inventory();
    std::size_t roundtrip = 0, memorized = 0, steps_max = 0;
    for (std::size_t w = 0; w < vocab.size(); ++w) {
        const auto& item = vocab.at(w);
        const std::vector<double> y(item.y.begin(), item.y.end());
        roundtrip += decode_output(y, inv) == item.y;
        LearnerState s = init_learner(w + 1);
        std::size_t steps = 0;
        while (!predict_correct(s, item, inv) && steps < 5000) {
            train_step_inplace(s, item.active_inputs, item.y);
            ++steps;
        }
        memorized += predict_correct(s, item, inv);
        steps_max = std::max(steps_max, steps);
    }
    Rng rng(10);
    std::size_t agree = 0;
    constexpr std::size_t n_vectors = 10000;
    for (std::size_t n = 0; n < n_vectors; ++n) {
        std::vector<double> m(kFeatureDim);
        for (auto& x : m) x = rng.uniform();
        agree += decode_phoneme_index(m, inv) == oracle::nearest(m, inv);
    }
    const std::size_t words = vocab.size();
    return {roundtrip == words && memorized == words && agree == n_vectors,
            format("rho(y) = y for %zu/%zu words, memorized %zu/%zu (max %zu steps), nearest agreement %zu/%zu",
                   roundtrip, words, memorized, words, steps_max, agree, n_vectors)};
}

// 6, 7 ---------------------------------------------------------------------

struct SeedRun {
    std::uint64_t seed = 0;
    double seconds = 0;
    double uniform = 0, uniform_se = 0;
    double pbar = 0, pbar_se = 0;
    double pq = 0, pq_se = 0;
    double p_value = 1;
};

std::vector<SeedRun> desk_runs(std::size_t n_seeds, std::size_t workers) {
    std::vector<SeedRun> runs;
    for (std::uint64_t seed = 1; seed <= n_seeds; ++seed) {
        ExperimentConfig config;
        config.seed = seed;
        const Executor ex(workers);
        const auto t0 = Clock::now();
        const auto prepared = prepare_task(config, ex);
        const auto out = run_comparison(config, prepared, ex);
        SeedRun r;
        r.seed = seed;
        r.seconds = seconds_since(t0);
        const auto* u = out.report.find("uniform");
        const auto* pb = out.report.find(kStage1Condition);
        const auto* pq = out.report.find(kStage2Condition);
        r.uniform = u->mean_accuracy;
        r.uniform_se = u->std_error;
        r.pbar = pb->mean_accuracy;
        r.pbar_se = pb->std_error;
        r.pq = pq->mean_accuracy;
        r.pq_se = pq->std_error;
        r.p_value = u->versus_optimized ? u->versus_optimized->p_value : 1.0;
        detail("seed %llu: uniform %.4f (se %.4f), Pbar* %.4f (se %.4f), (P*,Q*) %.4f (se %.4f), "
               "Welch p vs uniform %.3g, %.1f min",
               static_cast<unsigned long long>(seed), r.uniform, r.uniform_se, r.pbar, r.pbar_se, r.pq, r.pq_se,
               r.p_value, r.seconds / 60);
        runs.push_back(r);
    }
    return runs;
}

Outcome headline(const std::vector<SeedRun>& runs) {
    std::size_t wins = 0;
    double slowest = 0;
    for (const auto& r : runs) {
        wins += r.pq > r.uniform && r.p_value < 0.01;
        slowest = std::max(slowest, r.seconds);
    }
    const std::size_t need = runs.size() >= 5 ? runs.size() - 1 : runs.size();
    return {wins >= need && slowest <= 1800,
            format("(P*,Q*) beats uniform with p < 0.01 in %zu/%zu seeds (need %zu), slowest run %.1f min (<= 30)", wins,
                   runs.size(), need, slowest / 60)};
}

Outcome stage_ordering(const std::vector<SeedRun>& runs) {
    std::size_t ok = 0;
    std::string directions;
    for (const auto& r : runs) {
        // Cost is 1 - accuracy, so the cost comparison flips.
        const double pooled = std::sqrt(r.pq_se * r.pq_se + r.pbar_se * r.pbar_se);
        ok += (1 - r.pq) <= (1 - r.pbar) + pooled;
        directions += r.pq > r.pbar ? '+' : r.pq < r.pbar ? '-' : '=';
    }
    return {ok == runs.size(),
            format("cost(P*,Q*) <= cost(Pbar*) + 1 pooled stderr in %zu/%zu seeds; direction per seed %s", ok,
                   runs.size(), directions.c_str())};
}

// 8 ------------------------------------------------------------------------

Outcome efficiency_shape(std::size_t workers) {
    ExperimentConfig config;
    config.vocabulary.synthetic.exception_rate = 0.0;
    const auto vocab = load_vocabulary(config.vocabulary, config.seed).vocabulary;
    const auto t0 = Clock::now();
    const auto report = efficiency_experiment(vocab, EfficiencySettings{}, config.seed, Executor(workers));
    bool positive = !report.cells.empty();
    bool ordered = true;
    for (const auto& c : report.cells) {
        detail("K = %3zu: mean %.4f, q25 %.4f, q75 %.4f over %zu reps", c.pool_size, c.mean, c.q25, c.q75, c.reps);
        positive = positive && c.mean > 0 && *std::min_element(c.efficiencies.begin(), c.efficiencies.end()) > 0;
        ordered = ordered && c.q25 <= c.q75 && c.efficiencies.size() == c.reps;
    }
    const bool chart = !efficiency_svg(report).empty();
    return {positive && ordered && chart,
            format("c/K > 0 for every K and rep: %s, quartiles ordered: %s, chart drawn: %s, %.1f s",
                   positive ? "yes" : "no", ordered ? "yes" : "no", chart ? "yes" : "no", seconds_since(t0))};
}

// 9 ------------------------------------------------------------------------

Outcome statistics() {
    // References computed with mpmath at 50 digits.
    struct SpearmanFixture {
        std::vector<double> x, y;
        double rho, p;
    };
    const SpearmanFixture spearman[] = {
        {{1, 2, 2, 3, 4, 5, 5, 5, 6, 7}, {2, 1, 4, 3, 6, 5, 8, 7, 7, 9}, 0.88895663698463065, 0.00058059183016649524},
        {{10.5, 3.2, 7.7, 1.1, 9.9, 4.4, 6.6, 2.2}, {1, 5, 2, 8, 3, 7, 4, 6}, -0.90476190476190476, 0.0020082755054294691},
        {{1, 1, 1, 2, 2, 3, 3, 3, 3, 4, 5, 5}, {3, 1, 2, 2, 5, 4, 4, 6, 3, 7, 7, 8}, 0.86071065194551401,
         0.0003252819187039636},
    };
    struct WelchFixture {
        std::vector<double> a, b;
        double t, df, p;
    };
    const WelchFixture welch[] = {
        {{0.61, 0.58, 0.64, 0.59, 0.62, 0.60}, {0.55, 0.57, 0.52, 0.56, 0.58, 0.54, 0.53}, 4.7149516679144475,
         10.69620253164557, 0.00068483337920832508},
        {{3.1, 2.9, 3.3, 3.0, 3.2}, {1.0, 5.5, 2.2, 4.8, 0.3, 6.1, 3.9, 2.5}, -0.24917572158906642, 7.1242926021605124,
         0.81025638888993293},
    };
    double worst = 0.0;
    for (const auto& f : spearman) {
        const auto r = spearman_rho(f.x, f.y);
        worst = std::max({worst, std::abs(r.rho - f.rho), std::abs(r.p_value - f.p)});
    }
    for (const auto& f : welch) {
        const auto r = welch_t_test(f.a, f.b);
        worst = std::max({worst, std::abs(r.t - f.t), std::abs(r.df - f.df), std::abs(r.p_value - f.p)});
    }
    return {worst <= 1e-6, format("max deviation from references %.2e over 5 fixtures with ties (<= 1e-6)", worst)};
}

// 10 -----------------------------------------------------------------------

Outcome determinism(const std::string& cli) {
    if (cli.empty()) return {false, "no CLI path given (--cli)"};
    const auto dir = fs::temp_directory_path() / "seqteach_acceptance_determinism";
    fs::remove_all(dir);
    const std::string common =
        " --seed 7 --words 120 --pool-size 20 --horizon 300 --n-dirs 4 --n-seq 2 --steps 3 --n-best 10"
        " --baselines uniform,freq";
    std::vector<std::string> reports;
    for (int workers : {1, 4}) {
        const auto out = dir / ("w" + std::to_string(workers));
        const std::string cmd = "\"" + cli + "\"" + common + " --workers " + std::to_string(workers) + " --out \"" +
                                out.string() + "\" compare >/dev/null 2>&1";
        if (std::system(cmd.c_str()) != 0) return {false, "compare failed: " + cmd};
        reports.push_back(read_text_file(out / "report.json"));
    }
    const bool same = reports[0] == reports[1];
    return {same, format("report.json with --workers 1 and 4: %s (%zu bytes)", same ? "byte-identical" : "DIFFERENT",
                         reports[0].size())};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks"};
    std::string cli;
    std::vector<int> only;
    std::size_t seeds = 5;
    std::size_t workers = 1;
    app.add_option("--cli", cli, "path to the seqteach executable");
    app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',')->check(CLI::Range(1, 10));
    app.add_option("--seeds", seeds, "master seeds for criteria 6 and 7")->check(CLI::PositiveNumber);
    app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);

    const std::set<int> selected(only.begin(), only.end());
    auto wanted = [&](int n) { return selected.empty() || selected.contains(n); };

    std::size_t failures = 0;
    auto report = [&](int n, const char* title, const Outcome& o) {
        std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", n, title, o.summary.c_str());
        std::fflush(stdout);
        failures += !o.pass;
    };
    auto run = [&](int n, const char* title, const std::function<Outcome()>& f) {
        if (!wanted(n)) return;
        try {
            report(n, title, f());
        } catch (const std::exception& e) {
            report(n, title, Outcome{false, std::string("error: ") + e.what()});
        }
    };

    run(1, "gradient correctness", gradient_correctness);
    run(2, "estimator validity", estimator_validity);
    run(3, "update rule", update_rule);
    run(4, "distribution laws", distribution_laws);
    run(5, "decoder", decoder);
    if (wanted(6) || wanted(7)) {
        std::vector<SeedRun> runs;
        try {
            runs = desk_runs(seeds, workers);
        } catch (const std::exception& e) {
            std::printf("    desk runs failed: %s\n", e.what());
        }
        auto guarded = [&](auto f) {
            return [&, f] { return runs.empty() ? Outcome{false, "no desk runs"} : f(runs); };
        };
        run(6, "optimized beats uniform", guarded(headline));
        run(7, "stage ordering", guarded(stage_ordering));
    }
    run(8, "efficiency sweep shape", [&] { return efficiency_shape(workers); });
    run(9, "statistics", statistics);
    run(10, "determinism", [&] { return determinism(cli); });

    std::printf("%zu criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
