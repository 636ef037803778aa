#pragma once

// Sampling distributions over the training pool: softmax reparametrization,
// the linearly interpolated time-varying distribution, sequence sampling and
// prevalence baselines.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "seqteach/vocab.hpp"

namespace seqteach {

/// Probability vector over the K pool items.
class Multinomial {
public:
    Multinomial() = default;
    /// Validates nonnegativity and unit sum (within 1e-9).
    explicit Multinomial(std::vector<double> probs);

    static Multinomial uniform(std::size_t k);
    static Multinomial one_hot(std::size_t k, std::size_t index);

    std::size_t size() const noexcept { return probs_.size(); }
    double operator[](std::size_t i) const { return probs_[i]; }
    std::span<const double> probs() const noexcept { return probs_; }

    friend bool operator==(const Multinomial&, const Multinomial&) = default;

private:
    std::vector<double> probs_;
};

inline constexpr double kSumTolerance = 1e-9;

/// Softmax of (free..., 1): the last logit is pinned to 1.
Multinomial logits_to_multinomial(std::span<const double> free_logits);

/// Free logits (K-1 entries, last logit pinned at 1) reproducing a strictly
/// positive multinomial.
std::vector<double> multinomial_to_logits(const Multinomial& p);

/// R_t = ((T - t) / T) P + (t / T) Q for 0 <= t <= T.
Multinomial interpolate(const Multinomial& start, const Multinomial& end, std::size_t t, std::size_t horizon);

/// The pair (P, Q) and horizon T. Draws happen at t = 0 .. T-1.
struct TimeVaryingDistribution {
    Multinomial start;
    Multinomial end;
    std::size_t horizon = 0;

    TimeVaryingDistribution() = default;
    TimeVaryingDistribution(Multinomial p, Multinomial q, std::size_t horizon);

    std::size_t pool_size() const noexcept { return start.size(); }
    Multinomial at(std::size_t t) const { return interpolate(start, end, t, horizon); }
};

TimeVaryingDistribution from_logits(std::span<const double> alpha, std::span<const double> beta, std::size_t horizon);

/// P = Q: a distribution that does not vary over time.
TimeVaryingDistribution stationary(const Multinomial& p, std::size_t horizon);

struct TrainingSequence {
    std::vector<std::uint32_t> items;  // indices into the pool, length T
    std::uint64_t seed = 0;
};

/// Inverse-CDF draw from a probability vector given u in [0, 1).
std::size_t draw_categorical(std::span<const double> probs, double u);

/// Independent categorical draws u_t ~ R_t for t = 0 .. T-1.
TrainingSequence sample_sequence(const TimeVaryingDistribution& tvd, std::uint64_t seed);

enum class WeightTransform { identity, inverse };

inline constexpr double kInverseEpsilon = 1e-6;

/// "uniform", or the name of a weight column. Probabilities are proportional
/// to w (identity) or 1 / (w + 1e-6) (inverse, e.g. for age of acquisition).
Multinomial baseline_distribution(const Vocabulary& vocab, std::span<const std::size_t> pool, const std::string& kind,
                                  WeightTransform transform = WeightTransform::identity);

/// CSV with header `word,p_start,p_end,mean_pq`.
std::string distribution_csv(const Vocabulary& vocab, std::span<const std::size_t> pool, const Multinomial& start,
                             const Multinomial& end);

}  // namespace seqteach
