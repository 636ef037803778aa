#pragma once

// Independent reference computations shared by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "seqteach/learner.hpp"
#include "seqteach/random.hpp"

namespace oracle {

using seqteach::LearnerState;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Dense forward pass written directly from the layer equations.
inline std::vector<double> forward(const LearnerState& s, const std::vector<std::uint8_t>& o) {
    const auto& sh = s.shape;
    std::vector<double> h(sh.hidden), y(sh.outputs);
    for (std::size_t j = 0; j < sh.hidden; ++j) {
        double a = s.b1[j];
        for (std::size_t i = 0; i < sh.inputs; ++i) a += s.w1[i * sh.hidden + j] * o[i];
        h[j] = sigmoid(a);
    }
    for (std::size_t k = 0; k < sh.outputs; ++k) {
        double a = s.b2[k];
        for (std::size_t j = 0; j < sh.hidden; ++j) a += s.w2[k * sh.hidden + j] * h[j];
        y[k] = sigmoid(a);
    }
    return y;
}

/// Summed cross-entropy without clamping (finite-difference probes stay interior).
inline double loss(const LearnerState& s, const std::vector<std::uint8_t>& o, const std::vector<std::uint8_t>& y) {
    const auto p = forward(s, o);
    double l = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) l -= y[k] ? std::log(p[k]) : std::log(1.0 - p[k]);
    return l;
}

enum class Param { w1, b1, w2, b2 };

inline std::vector<double>& param(LearnerState& s, Param p) {
    switch (p) {
        case Param::w1: return s.w1;
        case Param::b1: return s.b1;
        case Param::w2: return s.w2;
        default: return s.b2;
    }
}

inline const std::vector<double>& grad(const seqteach::LearnerGradient& g, Param p) {
    switch (p) {
        case Param::w1: return g.w1;
        case Param::b1: return g.b1;
        case Param::w2: return g.w2;
        default: return g.b2;
    }
}

struct GradientCheck {
    double max_relative_error = 0.0;
    std::size_t coordinates = 0;
};

/// Compares backprop with central differences on `n` random coordinates of a
/// random network with random binary input/target. Relative error is
/// |a - n| / max(|a| + |n|, 1e-8).
inline GradientCheck check_gradient(seqteach::LearnerShape shape, std::uint64_t seed, std::size_t n,
                                    double h = 1e-5) {
    seqteach::Rng rng(seed);
    LearnerState s = seqteach::init_learner(seed, 0.5, shape);
    for (auto& b : s.b1) b = rng.uniform(-0.5, 0.5);
    for (auto& b : s.b2) b = rng.uniform(-0.5, 0.5);
    std::vector<std::uint8_t> o(shape.inputs), y(shape.outputs);
    for (auto& v : o) v = rng.below(2);
    for (auto& v : y) v = rng.below(2);
    const auto g = seqteach::loss_gradient(s, o, y);

    GradientCheck out;
    const Param params[] = {Param::w1, Param::b1, Param::w2, Param::b2};
    for (std::size_t c = 0; c < n; ++c) {
        const Param p = params[rng.below(4)];
        const std::size_t idx = rng.below(param(s, p).size());
        LearnerState plus = s, minus = s;
        param(plus, p)[idx] += h;
        param(minus, p)[idx] -= h;
        const double numeric = (loss(plus, o, y) - loss(minus, o, y)) / (2.0 * h);
        const double analytic = grad(g, p)[idx];
        const double rel = std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), 1e-8);
        out.max_relative_error = std::max(out.max_relative_error, rel);
        ++out.coordinates;
    }
    return out;
}

/// Nesterov step from its definition, using loss_gradient at the lookahead point.
inline LearnerState nesterov_step(const LearnerState& s, const std::vector<std::uint8_t>& o,
                                  const std::vector<std::uint8_t>& y) {
    const double mu = s.hyper.momentum, lr = s.hyper.learning_rate;
    LearnerState look = s;
    for (Param p : {Param::w1, Param::b1, Param::w2, Param::b2}) {
        auto& w = param(look, p);
        const auto& v = p == Param::w1 ? s.v_w1 : p == Param::b1 ? s.v_b1 : p == Param::w2 ? s.v_w2 : s.v_b2;
        for (std::size_t i = 0; i < w.size(); ++i) w[i] += mu * v[i];
    }
    const auto g = seqteach::loss_gradient(look, o, y);
    LearnerState next = s;
    auto update = [&](std::vector<double>& w, std::vector<double>& v, const std::vector<double>& gr) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            v[i] = mu * v[i] - lr * gr[i];
            w[i] += v[i];
        }
    };
    update(next.w1, next.v_w1, g.w1);
    update(next.b1, next.v_b1, g.b1);
    update(next.w2, next.v_w2, g.w2);
    update(next.b2, next.v_b2, g.b2);
    return next;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return a.size() == b.size() ? m : std::numeric_limits<double>::infinity();
}

inline double state_distance(const LearnerState& a, const LearnerState& b) {
    return std::max({max_abs_diff(a.w1, b.w1), max_abs_diff(a.b1, b.b1), max_abs_diff(a.w2, b.w2),
                     max_abs_diff(a.b2, b.b2), max_abs_diff(a.v_w1, b.v_w1), max_abs_diff(a.v_w2, b.v_w2)});
}

/// Nearest entry by squared distance, scanning every entry; first minimum wins.
inline std::size_t nearest(const std::vector<double>& m, const seqteach::PhonemeInventory& inv) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < inv.size(); ++i) {
        double d = 0.0;
        for (std::size_t f = 0; f < m.size(); ++f) d += (m[f] - inv.at(i).features[f]) * (m[f] - inv.at(i).features[f]);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

}  // namespace oracle
