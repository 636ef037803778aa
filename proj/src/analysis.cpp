#include "seqteach/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "seqteach/error.hpp"
#include "text_util.hpp"

namespace seqteach {

namespace {

const WordItem& lookup(const Vocabulary& vocab, std::string_view word) {
    auto idx = vocab.find(word);
    if (!idx) throw UsageError("word '" + std::string(word) + "' is not in the vocabulary");
    return vocab.at(*idx);
}

std::string join_codes(const Alignment& a, std::size_t from, std::size_t to) {
    std::string out;
    for (std::size_t s = from; s < to; ++s) {
        if (a.phon[s] == kPadPhoneme) continue;
        if (!out.empty()) out += ' ';
        out += a.phon[s];
    }
    return out;
}

std::string body_of(const WordItem& w) { return w.segmentation.vowel + w.segmentation.coda; }
std::string rime_of(const WordItem& w) { return join_codes(w.alignment, 3, kPhonSlots); }

double mean_of(std::span<const double> xs) {
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double variance_of(std::span<const double> xs, double mean) {
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(xs.size() - 1);
}

}  // namespace

std::size_t levenshtein(std::string_view a, std::string_view b) {
    if (a.size() < b.size()) std::swap(a, b);
    std::vector<std::size_t> row(b.size() + 1);
    std::iota(row.begin(), row.end(), std::size_t{0});
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0u : 1u)});
            diag = up;
        }
    }
    return row[b.size()];
}

std::size_t orthographic_neighbors(const Vocabulary& vocab, std::string_view word) {
    const WordItem& target = lookup(vocab, word);
    std::size_t count = 0;
    for (const auto& other : vocab.items()) {
        const auto la = target.word.size();
        const auto lb = other.word.size();
        if ((la > lb ? la - lb : lb - la) > 1) continue;
        if (levenshtein(target.word, other.word) == 1) ++count;
    }
    return count;
}

std::size_t phonological_neighbors(const Vocabulary& vocab, std::string_view word) {
    const WordItem& target = lookup(vocab, word);
    const std::string body = body_of(target);
    const std::string rime = rime_of(target);
    std::size_t count = 0;
    for (const auto& other : vocab.items()) {
        if (other.word == target.word) continue;
        if (body_of(other) == body && rime_of(other) == rime) ++count;
    }
    return count;
}

std::size_t phonological_density(const WordItem& item) {
    return static_cast<std::size_t>(std::count(item.y.begin(), item.y.end(), std::uint8_t{1}));
}

std::pair<std::string, std::string> unit_realization(const WordItem& item, EntropyUnit unit) {
    const auto& seg = item.segmentation;
    switch (unit) {
        case EntropyUnit::oncleus:
            return {seg.onset + seg.vowel, join_codes(item.alignment, 0, 4)};
        case EntropyUnit::vowel:
            return {seg.vowel, item.alignment.phon[3]};
        case EntropyUnit::rime:
            return {seg.vowel + seg.coda, rime_of(item)};
    }
    return {};
}

std::vector<double> unit_entropy(const Vocabulary& vocab, EntropyUnit unit,
                                 const std::optional<std::string>& token_weight_column) {
    std::map<std::string, std::map<std::string, double>> realizations;
    std::vector<std::string> keys;
    keys.reserve(vocab.size());
    for (const auto& item : vocab.items()) {
        auto [orth, phon] = unit_realization(item, unit);
        double weight = 1.0;
        if (token_weight_column) {
            auto it = item.weights.find(*token_weight_column);
            weight = it == item.weights.end() ? 0.0 : it->second;
        }
        realizations[orth][phon] += weight;
        keys.push_back(std::move(orth));
    }
    std::map<std::string, double> entropy;
    for (const auto& [orth, counts] : realizations) {
        double total = 0.0;
        for (const auto& [phon, c] : counts) total += c;
        double h = 0.0;
        if (total > 0.0) {
            for (const auto& [phon, c] : counts) {
                if (c <= 0.0) continue;
                const double p = c / total;
                h -= p * std::log2(p);
            }
        }
        entropy[orth] = std::max(0.0, h);
    }
    std::vector<double> out;
    out.reserve(keys.size());
    for (const auto& k : keys) out.push_back(entropy[k]);
    return out;
}

std::vector<double> average_ranks(std::span<const double> xs) {
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(xs.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

double student_t_two_sided_p(double t, double df) {
    if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
    if (std::isinf(t)) return 0.0;
    const double a = std::abs(t);
    if (!std::isfinite(df) || df > 1e12) {
        const boost::math::normal_distribution<double> normal;
        return 2.0 * boost::math::cdf(boost::math::complement(normal, a));
    }
    const boost::math::students_t_distribution<double> dist(df);
    return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, a)));
}

CorrelationTest spearman_rho(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw UsageError("spearman: samples differ in length");
    if (xs.size() < 3) throw UsageError("spearman: need at least 3 pairs");
    const auto rx = average_ranks(xs);
    const auto ry = average_ranks(ys);
    const double mx = mean_of(rx);
    const double my = mean_of(ry);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw UsageError("spearman: zero variance in ranks");
    CorrelationTest out;
    out.rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    const double n = static_cast<double>(xs.size());
    const double denom = 1.0 - out.rho * out.rho;
    if (denom <= 0.0) {
        out.p_value = 0.0;
    } else {
        out.p_value = student_t_two_sided_p(out.rho * std::sqrt((n - 2.0) / denom), n - 2.0);
    }
    return out;
}

TTest welch_t_test(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() < 2 || ys.size() < 2) throw UsageError("t-test: each sample needs at least 2 values");
    const double nx = static_cast<double>(xs.size());
    const double ny = static_cast<double>(ys.size());
    const double mx = mean_of(xs);
    const double my = mean_of(ys);
    const double qx = variance_of(xs, mx) / nx;
    const double qy = variance_of(ys, my) / ny;
    const double se2 = qx + qy;
    TTest out;
    if (se2 == 0.0) {
        if (mx != my) throw UsageError("t-test: both samples are constant with different means");
        out.t = 0.0;
        out.df = nx + ny - 2.0;
        out.p_value = 1.0;
        return out;
    }
    out.t = (mx - my) / std::sqrt(se2);
    out.df = se2 * se2 / (qx * qx / (nx - 1.0) + qy * qy / (ny - 1.0));
    out.p_value = student_t_two_sided_p(out.t, out.df);
    return out;
}

WordVariables compute_word_variables(const Vocabulary& vocab, std::span<const std::size_t> indices) {
    WordVariables vars;
    const std::size_t n = indices.size();
    for (auto idx : indices) vars.words.push_back(vocab.at(idx).word);

    auto column = [&](std::string name, auto&& fn) {
        std::vector<double> values(n);
        for (std::size_t i = 0; i < n; ++i) values[i] = fn(i, vocab.at(indices[i]));
        vars.columns.emplace_back(std::move(name), std::move(values));
    };
    column("orth_length", [](std::size_t, const WordItem& w) { return static_cast<double>(w.orth_length()); });
    column("phon_length", [](std::size_t, const WordItem& w) { return static_cast<double>(w.phon_length()); });
    column("orth_neighbors", [&](std::size_t, const WordItem& w) {
        return static_cast<double>(orthographic_neighbors(vocab, w.word));
    });
    column("phon_neighbors", [&](std::size_t, const WordItem& w) {
        return static_cast<double>(phonological_neighbors(vocab, w.word));
    });
    column("phon_density", [](std::size_t, const WordItem& w) { return static_cast<double>(phonological_density(w)); });

    const std::pair<const char*, EntropyUnit> units[] = {
        {"oncleus_entropy", EntropyUnit::oncleus}, {"vowel_entropy", EntropyUnit::vowel}, {"rime_entropy", EntropyUnit::rime}};
    for (const auto& [name, unit] : units) {
        const auto all = unit_entropy(vocab, unit);
        column(name, [&](std::size_t i, const WordItem&) { return all[indices[i]]; });
    }

    for (const auto& col : vocab.weight_columns()) {
        const bool complete = std::all_of(indices.begin(), indices.end(),
                                          [&](std::size_t idx) { return vocab.at(idx).weights.contains(col); });
        if (!complete) {
            vars.skipped.push_back(col);
            continue;
        }
        column(col, [&](std::size_t, const WordItem& w) { return w.weights.at(col); });
    }
    for (const char* known : {"morphology", "aoa", "child_freq", "adult_freq"}) {
        const auto& cols = vocab.weight_columns();
        if (std::find(cols.begin(), cols.end(), known) == cols.end()) vars.skipped.emplace_back(known);
    }
    return vars;
}

std::vector<CorrelationRow> correlate_with_mean_pq(const Vocabulary& vocab, std::span<const std::size_t> pool,
                                                   const Multinomial& start, const Multinomial& end) {
    if (start.size() != pool.size() || end.size() != pool.size()) {
        throw UsageError("distributions do not match the pool size");
    }
    std::vector<double> target(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) target[i] = 0.5 * (start[i] + end[i]);

    const auto vars = compute_word_variables(vocab, pool);
    std::vector<CorrelationRow> rows;
    for (const auto& [name, values] : vars.columns) {
        CorrelationRow row;
        row.variable = name;
        try {
            const auto r = spearman_rho(values, target);
            row.rho = r.rho;
            row.p_value = r.p_value;
        } catch (const UsageError& e) {
            row.note = std::string("undefined: ") + e.what();
        }
        rows.push_back(std::move(row));
    }
    const auto& cols = vocab.weight_columns();
    for (const auto& name : vars.skipped) {
        const bool present = std::find(cols.begin(), cols.end(), name) != cols.end();
        rows.push_back(CorrelationRow{name, std::nullopt, std::nullopt,
                                      present ? "skipped: missing for some pool words" : "skipped: not in vocabulary"});
    }
    return rows;
}

std::string correlation_csv(std::span<const CorrelationRow> rows) {
    std::string out = "variable,rho,p_value,significant\n";
    for (const auto& r : rows) {
        out += r.variable + ',';
        if (r.rho) out += detail::format_double(*r.rho);
        out += ',';
        if (r.p_value) out += detail::format_double(*r.p_value);
        out += ',';
        if (r.rho) out += r.significant() ? "1" : "0";
        out += '\n';
    }
    return out;
}

}  // namespace seqteach
