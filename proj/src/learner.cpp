#include "seqteach/learner.hpp"

#include <algorithm>
#include <cmath>

#include "seqteach/error.hpp"
#include "seqteach/random.hpp"

namespace seqteach {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Four interleaved partial sums: breaks the add dependency chain so the loop
// vectorizes without reassociation flags. The summation order is fixed.
inline double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        s0 += a[j] * b[j];
        s1 += a[j + 1] * b[j + 1];
        s2 += a[j + 2] * b[j + 2];
        s3 += a[j + 3] * b[j + 3];
    }
    for (; j < n; ++j) s0 += a[j] * b[j];
    return (s0 + s1) + (s2 + s3);
}

bool finite_all(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void check_shape(const LearnerState& s, std::size_t in, std::size_t out) {
    if (in != s.shape.inputs) {
        throw UsageError("input has " + std::to_string(in) + " entries, learner expects " +
                         std::to_string(s.shape.inputs));
    }
    if (out != s.shape.outputs) {
        throw UsageError("target has " + std::to_string(out) + " entries, learner expects " +
                         std::to_string(s.shape.outputs));
    }
}

/// Forward pass that keeps the hidden activations.
void forward_into(const LearnerState& s, std::span<const std::uint16_t> active, std::vector<double>& hidden,
                  std::vector<double>& out) {
    const std::size_t H = s.shape.hidden;
    hidden.assign(s.b1.begin(), s.b1.end());
    for (auto i : active) {
        const double* col = &s.w1[static_cast<std::size_t>(i) * H];
        for (std::size_t j = 0; j < H; ++j) hidden[j] += col[j];
    }
    for (auto& h : hidden) h = sigmoid(h);
    out.resize(s.shape.outputs);
    for (std::size_t k = 0; k < s.shape.outputs; ++k) {
        const double* row = &s.w2[k * H];
        out[k] = sigmoid(s.b2[k] + dot(row, hidden.data(), H));
    }
}

void accumulate_gradient(const LearnerState& s, std::span<const std::uint16_t> active,
                         std::span<const std::uint8_t> y, LearnerGradient& acc, double scale) {
    const std::size_t H = s.shape.hidden;
    std::vector<double> hidden, out;
    forward_into(s, active, hidden, out);
    std::vector<double> dh(H, 0.0);
    for (std::size_t k = 0; k < s.shape.outputs; ++k) {
        const double d = out[k] - static_cast<double>(y[k]);
        const double* row = &s.w2[k * H];
        double* g = &acc.w2[k * H];
        for (std::size_t j = 0; j < H; ++j) {
            dh[j] += row[j] * d;
            g[j] += scale * (d * hidden[j]);
        }
        acc.b2[k] += scale * d;
    }
    for (std::size_t j = 0; j < H; ++j) {
        dh[j] *= hidden[j] * (1.0 - hidden[j]);
        acc.b1[j] += scale * dh[j];
    }
    for (auto i : active) {
        double* g = &acc.w1[static_cast<std::size_t>(i) * H];
        for (std::size_t j = 0; j < H; ++j) g[j] += scale * dh[j];
    }
}

LearnerGradient zero_gradient(const LearnerState& s) {
    return LearnerGradient{std::vector<double>(s.w1.size(), 0.0), std::vector<double>(s.b1.size(), 0.0),
                           std::vector<double>(s.w2.size(), 0.0), std::vector<double>(s.b2.size(), 0.0)};
}

LearnerState lookahead(const LearnerState& s) {
    LearnerState look = s;
    const double mu = s.hyper.momentum;
    auto shift = [mu](std::vector<double>& w, const std::vector<double>& v) {
        for (std::size_t i = 0; i < w.size(); ++i) w[i] += mu * v[i];
    };
    shift(look.w1, s.v_w1);
    shift(look.b1, s.v_b1);
    shift(look.w2, s.v_w2);
    shift(look.b2, s.v_b2);
    return look;
}

}  // namespace

LearnerState::LearnerState(LearnerShape s, LearnerHyper h)
    : shape(s),
      hyper(h),
      w1(s.inputs * s.hidden, 0.0),
      b1(s.hidden, 0.0),
      w2(s.outputs * s.hidden, 0.0),
      b2(s.outputs, 0.0),
      v_w1(w1.size(), 0.0),
      v_b1(b1.size(), 0.0),
      v_w2(w2.size(), 0.0),
      v_b2(b2.size(), 0.0) {}

bool LearnerState::all_finite() const {
    return finite_all(w1) && finite_all(b1) && finite_all(w2) && finite_all(b2) && finite_all(v_w1) &&
           finite_all(v_b1) && finite_all(v_w2) && finite_all(v_b2);
}

LearnerState init_learner(std::uint64_t seed, double init_scale, LearnerShape shape, LearnerHyper hyper) {
    if (!(init_scale >= 0.0) || !std::isfinite(init_scale)) throw UsageError("init_scale must be >= 0");
    LearnerState s(shape, hyper);
    Rng rng(derive_seed(seed, {0x1ea7}));
    for (auto& w : s.w1) w = rng.uniform(-init_scale, init_scale);
    for (auto& w : s.w2) w = rng.uniform(-init_scale, init_scale);
    return s;
}

std::vector<std::uint16_t> active_indices(std::span<const std::uint8_t> o) {
    std::vector<std::uint16_t> active;
    for (std::size_t i = 0; i < o.size(); ++i) {
        if (o[i]) active.push_back(static_cast<std::uint16_t>(i));
    }
    return active;
}

std::vector<double> forward_active(const LearnerState& state, std::span<const std::uint16_t> active) {
    std::vector<double> hidden, out;
    forward_into(state, active, hidden, out);
    for (double v : out) {
        if (!std::isfinite(v)) throw ComputeError("non-finite network output (corrupted learner state)");
    }
    return out;
}

std::vector<double> forward(const LearnerState& state, std::span<const std::uint8_t> o) {
    if (o.size() != state.shape.inputs) throw UsageError("input size does not match learner");
    const auto active = active_indices(o);
    return forward_active(state, active);
}

double example_loss(const LearnerState& state, std::span<const std::uint8_t> o, std::span<const std::uint8_t> y) {
    check_shape(state, o.size(), y.size());
    const auto y_hat = forward(state, o);
    double loss = 0.0;
    for (std::size_t k = 0; k < y_hat.size(); ++k) {
        const double p = std::clamp(y_hat[k], kProbabilityClamp, 1.0 - kProbabilityClamp);
        loss -= y[k] ? std::log(p) : std::log(1.0 - p);
    }
    return loss;
}

LearnerGradient loss_gradient(const LearnerState& state, std::span<const std::uint8_t> o,
                              std::span<const std::uint8_t> y) {
    check_shape(state, o.size(), y.size());
    auto g = zero_gradient(state);
    const auto active = active_indices(o);
    accumulate_gradient(state, active, y, g, 1.0);
    return g;
}

void train_step_inplace(LearnerState& s, std::span<const std::uint16_t> active, std::span<const std::uint8_t> y) {
    const std::size_t H = s.shape.hidden;
    const std::size_t O = s.shape.outputs;
    const std::size_t I = s.shape.inputs;
    const double mu = s.hyper.momentum;
    const double lr = s.hyper.learning_rate;

    thread_local std::vector<double> hidden, dh, look;
    thread_local std::vector<std::uint8_t> is_active;
    hidden.resize(H);
    look.resize(H);
    dh.assign(H, 0.0);
    is_active.assign(I, 0);

    // Forward at the lookahead point w + mu v.
    for (std::size_t j = 0; j < H; ++j) hidden[j] = s.b1[j] + mu * s.v_b1[j];
    for (auto i : active) {
        is_active[i] = 1;
        const double* w = &s.w1[static_cast<std::size_t>(i) * H];
        const double* v = &s.v_w1[static_cast<std::size_t>(i) * H];
        for (std::size_t j = 0; j < H; ++j) hidden[j] += w[j] + mu * v[j];
    }
    for (auto& h : hidden) h = sigmoid(h);

    // Output rows: activation, error, backprop contribution and update fused
    // in one pass; the lookahead row is consumed before the row is updated.
    for (std::size_t k = 0; k < O; ++k) {
        double* w = &s.w2[k * H];
        double* v = &s.v_w2[k * H];
        for (std::size_t j = 0; j < H; ++j) look[j] = w[j] + mu * v[j];
        const double a = (s.b2[k] + mu * s.v_b2[k]) + dot(look.data(), hidden.data(), H);
        const double d = sigmoid(a) - static_cast<double>(y[k]);
        for (std::size_t j = 0; j < H; ++j) {
            dh[j] += look[j] * d;
            v[j] = mu * v[j] - lr * (d * hidden[j]);
            w[j] += v[j];
        }
        s.v_b2[k] = mu * s.v_b2[k] - lr * d;
        s.b2[k] += s.v_b2[k];
    }

    for (std::size_t j = 0; j < H; ++j) {
        dh[j] *= hidden[j] * (1.0 - hidden[j]);
        s.v_b1[j] = mu * s.v_b1[j] - lr * dh[j];
        s.b1[j] += s.v_b1[j];
    }
    // Inactive input columns have zero gradient but still coast on momentum.
    for (std::size_t i = 0; i < I; ++i) {
        double* w = &s.w1[i * H];
        double* v = &s.v_w1[i * H];
        if (is_active[i]) {
            for (std::size_t j = 0; j < H; ++j) {
                v[j] = mu * v[j] - lr * dh[j];
                w[j] += v[j];
            }
        } else {
            for (std::size_t j = 0; j < H; ++j) {
                v[j] = mu * v[j];
                w[j] += v[j];
            }
        }
    }
}

LearnerState train_step(LearnerState state, std::span<const std::uint8_t> o, std::span<const std::uint8_t> y) {
    check_shape(state, o.size(), y.size());
    const auto active = active_indices(o);
    train_step_inplace(state, active, y);
    return state;
}

void train_sequence(LearnerState& state, std::span<const WordItem> items, std::span<const std::size_t> pool,
                    std::span<const std::uint32_t> sequence) {
    for (auto u : sequence) {
        const WordItem& item = items[pool[u]];
        train_step_inplace(state, item.active_inputs, item.y);
    }
}

std::size_t decode_phoneme_index(std::span<const double> m_hat, const PhonemeInventory& inventory) {
    if (m_hat.size() != kFeatureDim) throw UsageError("phoneme slot must have 25 entries");
    if (inventory.size() == 0) throw UsageError("empty phoneme inventory");
    std::size_t best = 0;
    double best_d2 = 0.0;
    for (std::size_t p = 0; p < inventory.size(); ++p) {
        const auto& f = inventory.at(p).features;
        double d2 = 0.0;
        for (std::size_t i = 0; i < kFeatureDim; ++i) {
            const double diff = m_hat[i] - static_cast<double>(f[i]);
            d2 += diff * diff;
        }
        if (p == 0 || d2 < best_d2) {
            best = p;
            best_d2 = d2;
        }
    }
    return best;
}

const std::string& decode_phoneme(std::span<const double> m_hat, const PhonemeInventory& inventory) {
    return inventory.at(decode_phoneme_index(m_hat, inventory)).code;
}

std::vector<std::size_t> decode_slots(std::span<const double> y_hat, const PhonemeInventory& inventory) {
    if (y_hat.size() != kOutputDim) throw UsageError("output vector must have 200 entries");
    std::vector<std::size_t> slots(kPhonSlots);
    for (std::size_t s = 0; s < kPhonSlots; ++s) {
        slots[s] = decode_phoneme_index(y_hat.subspan(s * kFeatureDim, kFeatureDim), inventory);
    }
    return slots;
}

std::vector<std::uint8_t> decode_output(std::span<const double> y_hat, const PhonemeInventory& inventory) {
    std::vector<std::uint8_t> out;
    out.reserve(kOutputDim);
    for (auto idx : decode_slots(y_hat, inventory)) {
        const auto& f = inventory.at(idx).features;
        out.insert(out.end(), f.begin(), f.end());
    }
    return out;
}

Prediction predict(const LearnerState& state, std::span<const std::uint8_t> o, const PhonemeInventory& inventory) {
    Prediction p;
    p.y_hat = forward(state, o);
    for (auto idx : decode_slots(p.y_hat, inventory)) p.decoded.push_back(inventory.at(idx).code);
    return p;
}

bool predict_correct(const LearnerState& state, const WordItem& item, const PhonemeInventory& inventory) {
    const auto y_hat = forward_active(state, item.active_inputs);
    const auto decoded = decode_output(y_hat, inventory);
    return decoded == item.y;
}

std::size_t count_correct(const LearnerState& state, std::span<const WordItem> items,
                          std::span<const std::size_t> indices, const PhonemeInventory& inventory) {
    if (state.shape.outputs != kOutputDim || state.shape.inputs != kInputDim) {
        throw UsageError("word prediction requires a 260-input, 200-output learner");
    }
    std::size_t correct = 0;
    for (auto idx : indices) {
        const WordItem& item = items[idx];
        const auto y_hat = forward_active(state, item.active_inputs);
        bool ok = true;
        for (std::size_t s = 0; s < kPhonSlots && ok; ++s) {
            const auto slot = std::span<const double>(y_hat).subspan(s * kFeatureDim, kFeatureDim);
            ok = decode_phoneme_index(slot, inventory) == item.phoneme_index[s];
        }
        if (ok) ++correct;
    }
    return correct;
}

double terminal_cost(const LearnerState& state, std::span<const WordItem> items, std::span<const std::size_t> indices,
                     const PhonemeInventory& inventory) {
    if (indices.empty()) throw UsageError("terminal cost needs a nonempty test set");
    const std::size_t correct = count_correct(state, items, indices, inventory);
    return static_cast<double>(indices.size() - correct) / static_cast<double>(indices.size());
}

BatchResult batch_train_to_convergence(LearnerState state, std::span<const WordItem> items,
                                       std::span<const std::size_t> pool, double learning_rate,
                                       const ConvergenceCriteria& criteria, const PhonemeInventory& inventory) {
    if (pool.empty()) throw UsageError("batch training needs a nonempty pool");
    if (!(learning_rate > 0.0)) throw UsageError("learning rate must be positive");

    auto accuracy = [&](const LearnerState& s) {
        return static_cast<double>(count_correct(s, items, pool, inventory)) / static_cast<double>(pool.size());
    };

    BatchResult result{state, 0, accuracy(state)};
    double best = result.train_accuracy;
    std::size_t since_improvement = 0;
    const double mu = state.hyper.momentum;
    const double scale = 1.0 / static_cast<double>(pool.size());

    while (result.epochs < criteria.max_epochs && result.train_accuracy < criteria.target_train_accuracy) {
        const LearnerState look = lookahead(state);
        auto g = zero_gradient(state);
        for (auto idx : pool) accumulate_gradient(look, items[idx].active_inputs, items[idx].y, g, scale);

        auto apply = [&](std::vector<double>& w, std::vector<double>& v, const std::vector<double>& grad) {
            for (std::size_t i = 0; i < w.size(); ++i) {
                v[i] = mu * v[i] - learning_rate * grad[i];
                w[i] += v[i];
            }
        };
        apply(state.w1, state.v_w1, g.w1);
        apply(state.b1, state.v_b1, g.b1);
        apply(state.w2, state.v_w2, g.w2);
        apply(state.b2, state.v_b2, g.b2);

        ++result.epochs;
        result.train_accuracy = accuracy(state);
        if (result.train_accuracy > best) {
            best = result.train_accuracy;
            since_improvement = 0;
        } else if (++since_improvement >= criteria.patience) {
            break;
        }
    }
    result.state = std::move(state);
    return result;
}

}  // namespace seqteach
