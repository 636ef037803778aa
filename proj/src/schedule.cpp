#include "seqteach/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "seqteach/error.hpp"
#include "seqteach/random.hpp"
#include "text_util.hpp"

namespace seqteach {

Multinomial::Multinomial(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw UsageError("multinomial needs at least one outcome");
    double sum = 0.0;
    for (double p : probs_) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw UsageError("multinomial probabilities must be finite and >= 0");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kSumTolerance) {
        throw UsageError("multinomial probabilities sum to " + detail::format_double(sum) + ", not 1");
    }
}

Multinomial Multinomial::uniform(std::size_t k) {
    if (k == 0) throw UsageError("multinomial needs at least one outcome");
    return Multinomial(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

Multinomial Multinomial::one_hot(std::size_t k, std::size_t index) {
    if (index >= k) throw UsageError("one-hot index out of range");
    std::vector<double> p(k, 0.0);
    p[index] = 1.0;
    return Multinomial(std::move(p));
}

Multinomial logits_to_multinomial(std::span<const double> free_logits) {
    for (double a : free_logits) {
        if (!std::isfinite(a)) throw UsageError("logits must be finite");
    }
    const std::size_t k = free_logits.size() + 1;
    double top = 1.0;
    for (double a : free_logits) top = std::max(top, a);
    std::vector<double> p(k);
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < k; ++i) {
        p[i] = std::exp(free_logits[i] - top);
        sum += p[i];
    }
    p[k - 1] = std::exp(1.0 - top);
    sum += p[k - 1];
    for (auto& x : p) x /= sum;
    return Multinomial(std::move(p));
}

std::vector<double> multinomial_to_logits(const Multinomial& p) {
    const std::size_t k = p.size();
    if (p[k - 1] <= 0.0) throw UsageError("cannot reparametrize a multinomial with a zero last entry");
    const double anchor = std::log(p[k - 1]);
    std::vector<double> free(k - 1);
    for (std::size_t i = 0; i + 1 < k; ++i) {
        if (p[i] <= 0.0) throw UsageError("cannot reparametrize a multinomial with zero entries");
        free[i] = std::log(p[i]) - anchor + 1.0;
    }
    return free;
}

Multinomial interpolate(const Multinomial& start, const Multinomial& end, std::size_t t, std::size_t horizon) {
    if (start.size() != end.size()) throw UsageError("start and end multinomials differ in size");
    if (horizon == 0 || t > horizon) throw UsageError("interpolation time out of range");
    if (t == 0) return start;
    if (t == horizon) return end;
    const double T = static_cast<double>(horizon);
    const double a = static_cast<double>(horizon - t) / T;
    const double b = static_cast<double>(t) / T;
    std::vector<double> r(start.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = a * start[i] + b * end[i];
    return Multinomial(std::move(r));
}

TimeVaryingDistribution::TimeVaryingDistribution(Multinomial p, Multinomial q, std::size_t T)
    : start(std::move(p)), end(std::move(q)), horizon(T) {
    if (start.size() != end.size()) throw UsageError("start and end multinomials differ in size");
}

TimeVaryingDistribution from_logits(std::span<const double> alpha, std::span<const double> beta, std::size_t horizon) {
    if (alpha.size() != beta.size()) throw UsageError("alpha and beta logits differ in size");
    return TimeVaryingDistribution(logits_to_multinomial(alpha), logits_to_multinomial(beta), horizon);
}

TimeVaryingDistribution stationary(const Multinomial& p, std::size_t horizon) {
    return TimeVaryingDistribution(p, p, horizon);
}

std::size_t draw_categorical(std::span<const double> probs, double u) {
    double total = 0.0;
    for (double p : probs) total += p;
    const double target = u * total;
    double cum = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        last_positive = i;
        cum += probs[i];
        if (target < cum) return i;
    }
    return last_positive;
}

TrainingSequence sample_sequence(const TimeVaryingDistribution& tvd, std::uint64_t seed) {
    if (tvd.horizon == 0) throw UsageError("horizon T must be >= 1");
    const std::size_t k = tvd.pool_size();
    const double T = static_cast<double>(tvd.horizon);
    TrainingSequence seq;
    seq.seed = seed;
    seq.items.resize(tvd.horizon);
    Rng rng(derive_seed(seed, {0x5e9}));
    std::vector<double> r(k);
    const bool fixed = tvd.start == tvd.end;
    if (fixed) std::copy(tvd.start.probs().begin(), tvd.start.probs().end(), r.begin());
    for (std::size_t t = 0; t < tvd.horizon; ++t) {
        if (!fixed) {
            const double a = static_cast<double>(tvd.horizon - t) / T;
            const double b = static_cast<double>(t) / T;
            for (std::size_t i = 0; i < k; ++i) r[i] = a * tvd.start[i] + b * tvd.end[i];
        }
        seq.items[t] = static_cast<std::uint32_t>(draw_categorical(r, rng.uniform()));
    }
    return seq;
}

Multinomial baseline_distribution(const Vocabulary& vocab, std::span<const std::size_t> pool, const std::string& kind,
                                  WeightTransform transform) {
    if (pool.empty()) throw UsageError("baseline needs a nonempty pool");
    if (kind == "uniform") return Multinomial::uniform(pool.size());

    const auto& columns = vocab.weight_columns();
    if (std::find(columns.begin(), columns.end(), kind) == columns.end()) {
        throw DataError("vocabulary has no weight column '" + kind + "'");
    }
    std::vector<double> w(pool.size(), 0.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const auto& weights = vocab.at(pool[i]).weights;
        auto it = weights.find(kind);
        if (it == weights.end()) continue;  // absent: outside the baseline's support
        w[i] = transform == WeightTransform::inverse ? 1.0 / (it->second + kInverseEpsilon) : it->second;
        sum += w[i];
    }
    if (!(sum > 0.0)) throw DataError("weight column '" + kind + "' has no positive mass on the pool");
    for (auto& x : w) x /= sum;
    return Multinomial(std::move(w));
}

std::string distribution_csv(const Vocabulary& vocab, std::span<const std::size_t> pool, const Multinomial& start,
                             const Multinomial& end) {
    if (start.size() != pool.size() || end.size() != pool.size()) {
        throw UsageError("distribution size does not match the pool");
    }
    std::string out = "word,p_start,p_end,mean_pq\n";
    for (std::size_t i = 0; i < pool.size(); ++i) {
        out += vocab.at(pool[i]).word + ',' + detail::format_double(start[i]) + ',' + detail::format_double(end[i]) +
               ',' + detail::format_double(0.5 * (start[i] + end[i])) + '\n';
    }
    return out;
}

}  // namespace seqteach
