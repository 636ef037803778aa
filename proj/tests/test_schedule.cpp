#include <doctest.h>

#include <cmath>
#include <vector>

#include "seqteach/error.hpp"
#include "seqteach/random.hpp"
#include "seqteach/schedule.hpp"
#include "seqteach/vocab.hpp"

using namespace seqteach;

TEST_CASE("multinomial validation") {
    CHECK_NOTHROW(Multinomial({0.25, 0.75}));
    CHECK_THROWS_AS(Multinomial({0.5, 0.6}), UsageError);
    CHECK_THROWS_AS(Multinomial({1.2, -0.2}), UsageError);
    CHECK(Multinomial::uniform(4).probs()[2] == 0.25);
    CHECK(Multinomial::one_hot(3, 1)[1] == 1.0);
}

TEST_CASE("softmax reparametrization") {
    SUBCASE("all logits equal to the pinned value gives uniform") {
        const auto p = logits_to_multinomial(std::vector<double>(4, 1.0));
        for (double x : p.probs()) CHECK(x == doctest::Approx(0.2));
    }
    SUBCASE("matches a direct softmax") {
        const std::vector<double> a{0.3, -2.0, 4.5};
        const double denom = std::exp(0.3) + std::exp(-2.0) + std::exp(4.5) + std::exp(1.0);
        const auto p = logits_to_multinomial(a);
        CHECK(p[0] == doctest::Approx(std::exp(0.3) / denom).epsilon(1e-14));
        CHECK(p[3] == doctest::Approx(std::exp(1.0) / denom).epsilon(1e-14));
    }
    SUBCASE("large logits do not overflow") {
        const auto p = logits_to_multinomial(std::vector<double>{800.0, 0.0});
        CHECK(p[0] == doctest::Approx(1.0));
    }
    SUBCASE("strictly monotone and invertible") {
        Rng rng(3);
        std::vector<double> a(9);
        for (auto& x : a) x = rng.uniform(-3, 3);
        const auto p = logits_to_multinomial(a);
        for (std::size_t i = 0; i < a.size(); ++i) {
            for (std::size_t j = 0; j < a.size(); ++j) {
                if (a[i] > a[j]) CHECK(p[i] > p[j]);
            }
        }
        const auto back = multinomial_to_logits(p);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(back[i] == doctest::Approx(a[i]).epsilon(1e-12));
    }
}

TEST_CASE("interpolation") {
    const Multinomial p({0.8, 0.2}), q({0.2, 0.8});
    CHECK(interpolate(p, q, 0, 10) == p);
    CHECK(interpolate(p, q, 10, 10) == q);
    const auto mid = interpolate(p, q, 5, 10);
    CHECK(mid[0] == doctest::Approx(0.5));
    CHECK(interpolate(p, p, 3, 10)[0] == doctest::Approx(0.8));
    CHECK_THROWS_AS(interpolate(p, q, 11, 10), UsageError);
    CHECK_THROWS_AS(interpolate(p, Multinomial::uniform(3), 1, 10), UsageError);

    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> a(6), b(6);
        for (auto& x : a) x = rng.uniform(-2, 2);
        for (auto& x : b) x = rng.uniform(-2, 2);
        const auto pp = logits_to_multinomial(a), qq = logits_to_multinomial(b);
        for (std::size_t t = 0; t <= 50; t += 7) {
            const auto r = interpolate(pp, qq, t, 50);
            double sum = 0.0;
            for (std::size_t i = 0; i < r.size(); ++i) {
                CHECK(r[i] >= std::min(pp[i], qq[i]) - 1e-15);
                CHECK(r[i] <= std::max(pp[i], qq[i]) + 1e-15);
                sum += r[i];
            }
            CHECK(std::abs(sum - 1.0) <= 1e-9);
        }
    }
}

TEST_CASE("sequence sampling") {
    SUBCASE("one-hot repeats one item") {
        const auto seq = sample_sequence(stationary(Multinomial::one_hot(5, 3), 100), 1);
        REQUIRE(seq.items.size() == 100);
        for (auto u : seq.items) CHECK(u == 3);
    }
    SUBCASE("deterministic in seed") {
        const auto tvd = stationary(Multinomial::uniform(7), 200);
        CHECK(sample_sequence(tvd, 4).items == sample_sequence(tvd, 4).items);
        CHECK(sample_sequence(tvd, 4).items != sample_sequence(tvd, 5).items);
        CHECK_THROWS_AS(sample_sequence(TimeVaryingDistribution(Multinomial::uniform(2), Multinomial::uniform(2), 0), 1),
                        UsageError);
    }
    SUBCASE("first decile of a one-hot sweep") {
        constexpr std::size_t T = 20000;
        const TimeVaryingDistribution tvd(Multinomial::one_hot(2, 0), Multinomial::one_hot(2, 1), T);
        const auto seq = sample_sequence(tvd, 9);
        double hits = 0.0, mean = 0.0, var = 0.0;
        for (std::size_t t = 0; t < T / 10; ++t) {
            const double p = static_cast<double>(T - t) / T;
            hits += seq.items[t] == 0;
            mean += p;
            var += p * (1 - p);
        }
        CHECK(std::abs(hits - mean) <= 3.0 * std::sqrt(var));
        CHECK(mean == doctest::Approx(0.95 * T / 10).epsilon(1e-3));
    }
    SUBCASE("stationary uniform frequencies") {
        constexpr std::size_t T = 100000, K = 8;
        const auto seq = sample_sequence(stationary(Multinomial::uniform(K), T), 12);
        std::vector<double> counts(K, 0.0);
        for (auto u : seq.items) counts[u] += 1;
        const double sigma = std::sqrt(T * (1.0 / K) * (1 - 1.0 / K));
        for (double c : counts) CHECK(std::abs(c - static_cast<double>(T) / K) <= 3.0 * sigma);
    }
}

TEST_CASE("inverse CDF draws") {
    const std::vector<double> p{0.2, 0.0, 0.5, 0.3};
    CHECK(draw_categorical(p, 0.0) == 0);
    CHECK(draw_categorical(p, 0.19999) == 0);
    CHECK(draw_categorical(p, 0.2) == 2);
    CHECK(draw_categorical(p, 0.6999) == 2);
    CHECK(draw_categorical(p, 0.9999999) == 3);
}

TEST_CASE("baseline distributions") {
    const std::string text =
        "word\tonset\tvowel\tcoda\tphonemes\tfreq\taoa\n"
        "cat\t\t\t\tk @ t\t3\t2\n"
        "dog\t\t\t\td c g\t1\t2\n"
        "pig\t\t\t\tp I g\t\t4\n";
    const auto v = parse_vocabulary(text, PhonemeInventory::builtin_english());
    const std::vector<std::size_t> pool{0, 1};
    CHECK(baseline_distribution(v, pool, "uniform") == Multinomial::uniform(2));
    const auto f = baseline_distribution(v, pool, "freq");
    CHECK(f[0] == doctest::Approx(0.75));
    const auto a = baseline_distribution(v, pool, "aoa", WeightTransform::inverse);
    CHECK(a[0] == doctest::Approx(0.5));

    const std::vector<std::size_t> with_missing{0, 2};
    const auto partial = baseline_distribution(v, with_missing, "freq");
    CHECK(partial[0] == 1.0);
    CHECK(partial[1] == 0.0);
    const auto inv = baseline_distribution(v, with_missing, "aoa", WeightTransform::inverse);
    CHECK(inv[0] == doctest::Approx((1 / (2 + 1e-6)) / (1 / (2 + 1e-6) + 1 / (4 + 1e-6))));
    CHECK_THROWS_AS(baseline_distribution(v, pool, "nope"), DataError);
    CHECK_THROWS_AS(baseline_distribution(v, std::vector<std::size_t>{2}, "freq"), DataError);

    const auto csv = distribution_csv(v, pool, f, Multinomial::uniform(2));
    CHECK(csv.rfind("word,p_start,p_end,mean_pq\ncat,0.75,0.5,0.625\n", 0) == 0);
}
