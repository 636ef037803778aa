#pragma once

// The cognitive model: a 260-100-200 sigmoid network trained online with
// Nesterov momentum on summed binary cross-entropy, plus the nearest-phoneme
// decoder and the generalization cost.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "seqteach/vocab.hpp"

namespace seqteach {

struct LearnerShape {
    std::size_t inputs = kInputDim;
    std::size_t hidden = 100;
    std::size_t outputs = kOutputDim;

    friend bool operator==(const LearnerShape&, const LearnerShape&) = default;
};

struct LearnerHyper {
    double learning_rate = 0.02;
    double momentum = 0.9;

    friend bool operator==(const LearnerHyper&, const LearnerHyper&) = default;
};

/// Weights, biases and their momentum velocities.
///
/// w1 is stored input-major (w1[i * hidden + j] connects input i to hidden j)
/// so the few active columns of a sparse binary input are contiguous. w2 is
/// output-major (w2[k * hidden + j]).
struct LearnerState {
    LearnerShape shape;
    LearnerHyper hyper;
    std::vector<double> w1, b1, w2, b2;
    std::vector<double> v_w1, v_b1, v_w2, v_b2;

    LearnerState() = default;
    LearnerState(LearnerShape shape, LearnerHyper hyper);

    bool all_finite() const;
    friend bool operator==(const LearnerState&, const LearnerState&) = default;
};

/// Parameter-shaped buffer for gradients.
struct LearnerGradient {
    std::vector<double> w1, b1, w2, b2;
};

inline constexpr double kDefaultInitScale = 0.1;
inline constexpr double kProbabilityClamp = 1e-12;

/// Weights uniform in [-init_scale, init_scale]; biases and velocities zero.
LearnerState init_learner(std::uint64_t seed, double init_scale = kDefaultInitScale, LearnerShape shape = {},
                          LearnerHyper hyper = {});

/// Indices of the set bits of a binary input vector.
std::vector<std::uint16_t> active_indices(std::span<const std::uint8_t> o);

/// y_hat = sigmoid(W2 sigmoid(W1 o + b1) + b2). Throws ComputeError on a
/// non-finite result.
std::vector<double> forward(const LearnerState& state, std::span<const std::uint8_t> o);
std::vector<double> forward_active(const LearnerState& state, std::span<const std::uint16_t> active);

/// Summed cross-entropy over outputs; y_hat clamped to [1e-12, 1 - 1e-12].
double example_loss(const LearnerState& state, std::span<const std::uint8_t> o, std::span<const std::uint8_t> y);

/// Backprop gradient of example_loss at the state's current weights.
LearnerGradient loss_gradient(const LearnerState& state, std::span<const std::uint8_t> o,
                              std::span<const std::uint8_t> y);

/// One online Nesterov update:
///   v <- mu v - lr grad L(w + mu v);  w <- w + v
void train_step_inplace(LearnerState& state, std::span<const std::uint16_t> active, std::span<const std::uint8_t> y);
LearnerState train_step(LearnerState state, std::span<const std::uint8_t> o, std::span<const std::uint8_t> y);

/// Applies train_step for every index of `sequence` into `items`.
void train_sequence(LearnerState& state, std::span<const WordItem> items, std::span<const std::size_t> pool,
                    std::span<const std::uint32_t> sequence);

/// Nearest inventory entry by Euclidean distance; ties go to the lowest index.
std::size_t decode_phoneme_index(std::span<const double> m_hat, const PhonemeInventory& inventory);
const std::string& decode_phoneme(std::span<const double> m_hat, const PhonemeInventory& inventory);

/// Slot-wise nearest phoneme indices for a 200-dim output.
std::vector<std::size_t> decode_slots(std::span<const double> y_hat, const PhonemeInventory& inventory);

/// rho: the re-encoded binary vector of the decoded phonemes.
std::vector<std::uint8_t> decode_output(std::span<const double> y_hat, const PhonemeInventory& inventory);

struct Prediction {
    std::vector<double> y_hat;
    std::vector<std::string> decoded;
};

Prediction predict(const LearnerState& state, std::span<const std::uint8_t> o, const PhonemeInventory& inventory);

/// True when every decoded slot equals the item's target phoneme.
bool predict_correct(const LearnerState& state, const WordItem& item, const PhonemeInventory& inventory);

/// Number of the indexed items predicted correctly.
std::size_t count_correct(const LearnerState& state, std::span<const WordItem> items,
                          std::span<const std::size_t> indices, const PhonemeInventory& inventory);

/// Fraction of the indexed items predicted incorrectly.
double terminal_cost(const LearnerState& state, std::span<const WordItem> items,
                     std::span<const std::size_t> indices, const PhonemeInventory& inventory);

struct ConvergenceCriteria {
    std::size_t max_epochs = 2000;
    std::size_t patience = 50;
    double target_train_accuracy = 1.0;
};

struct BatchResult {
    LearnerState state;
    std::size_t epochs = 0;
    double train_accuracy = 0.0;
};

/// Full-batch Nesterov training on the pool. The batch gradient is the mean
/// of the per-item summed cross-entropy gradients. Stops at the target train
/// accuracy, after `patience` epochs without improvement, or at max_epochs.
BatchResult batch_train_to_convergence(LearnerState state, std::span<const WordItem> items,
                                       std::span<const std::size_t> pool, double learning_rate,
                                       const ConvergenceCriteria& criteria, const PhonemeInventory& inventory);

}  // namespace seqteach
