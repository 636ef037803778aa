#pragma once

// Word-level structure variables and the statistics used to relate them to
// optimized sampling probabilities.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seqteach/schedule.hpp"
#include "seqteach/vocab.hpp"

namespace seqteach {

/// Unit-cost edit distance (insert, delete, substitute).
std::size_t levenshtein(std::string_view a, std::string_view b);

/// Other vocabulary words at edit distance exactly 1.
std::size_t orthographic_neighbors(const Vocabulary& vocab, std::string_view word);

/// Other words sharing both the orthographic body (vowel grapheme + coda)
/// and the phonological rime (vowel phoneme + coda phonemes).
std::size_t phonological_neighbors(const Vocabulary& vocab, std::string_view word);

/// Number of set features in the target phonology.
std::size_t phonological_density(const WordItem& item);

enum class EntropyUnit { oncleus, vowel, rime };

/// Orthographic unit string and its phonological realization for a word.
std::pair<std::string, std::string> unit_realization(const WordItem& item, EntropyUnit unit);

/// For each word, the Shannon entropy (bits) of the phonological
/// realizations of its orthographic unit across the vocabulary. Type-based by
/// default; with `token_weight_column` each word counts with that weight
/// (words lacking the column count zero).
std::vector<double> unit_entropy(const Vocabulary& vocab, EntropyUnit unit,
                                 const std::optional<std::string>& token_weight_column = std::nullopt);

/// Average ranks (1-based); ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> xs);

struct CorrelationTest {
    double rho = 0.0;
    double p_value = 1.0;
};

/// Spearman's rho (Pearson on average ranks) with a two-sided p-value from
/// t = rho sqrt((n - 2) / (1 - rho^2)) on n - 2 degrees of freedom.
/// Throws UsageError for length mismatch, n < 3 or a constant input.
CorrelationTest spearman_rho(std::span<const double> xs, std::span<const double> ys);

struct TTest {
    double t = 0.0;
    double df = 0.0;
    double p_value = 1.0;

    friend bool operator==(const TTest&, const TTest&) = default;
};

/// Welch's unequal-variance t-test, two-sided. Identical samples give t = 0,
/// p = 1; throws UsageError when both samples have zero variance but
/// different means, or when either has fewer than 2 values.
TTest welch_t_test(std::span<const double> xs, std::span<const double> ys);

/// Two-sided tail probability of Student's t with `df` degrees of freedom.
double student_t_two_sided_p(double t, double df);

/// Per-word variables over a set of vocabulary indices.
struct WordVariables {
    std::vector<std::string> words;
    /// Variable name -> one value per word, in display order.
    std::vector<std::pair<std::string, std::vector<double>>> columns;
    /// Optional columns that were requested but unavailable.
    std::vector<std::string> skipped;
};

/// Computes the structural variables (lengths, neighborhoods, density,
/// entropies) for `indices`; neighborhoods and entropies are measured
/// against the whole vocabulary. Every weight column that all indexed words
/// carry is passed through; a column missing for some word is skipped.
WordVariables compute_word_variables(const Vocabulary& vocab, std::span<const std::size_t> indices);

struct CorrelationRow {
    std::string variable;
    std::optional<double> rho;  // empty when undefined (constant input)
    std::optional<double> p_value;
    std::string note;

    bool significant(double alpha = 0.05) const { return p_value && *p_value < alpha; }
};

/// Spearman correlation of every word variable with (P_i + Q_i) / 2 over the pool.
std::vector<CorrelationRow> correlate_with_mean_pq(const Vocabulary& vocab, std::span<const std::size_t> pool,
                                                   const Multinomial& start, const Multinomial& end);

/// CSV `variable,rho,p_value,significant` (undefined cells left empty).
std::string correlation_csv(std::span<const CorrelationRow> rows);

}  // namespace seqteach
