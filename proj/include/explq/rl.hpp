#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "explq/errors.hpp"
#include "explq/market.hpp"
#include "explq/model.hpp"
#include "explq/mv_alm_shift.hpp"
#include "explq/rng.hpp"

namespace explq {

/// x^n for integer n (binary exponentiation; exact sign handling for
/// negative bases, which the theta ratio can have).
inline double ipow(double x, int n) {
    if (n < 0) return 1.0 / ipow(x, -n);
    double r = 1.0, p = x;
    while (n > 0) {
        if (n & 1) r *= p;
        p *= p;
        n >>= 1;
    }
    return r;
}

/// The five learnable value/policy parameters plus the Lagrange
/// multiplier.
struct ThetaVector {
    double th1 = 1.0;
    double th2 = 1.0;
    double th3 = 1.0;
    double th4 = 1.0;
    double th5 = 1.0;
    double gamma = 0.0;

    std::array<double, 5> coeffs() const { return {th1, th2, th3, th4, th5}; }
    void set_coeffs(const std::array<double, 5>& c) {
        th1 = c[0];
        th2 = c[1];
        th3 = c[2];
        th4 = c[3];
        th5 = c[4];
    }
};

/// Values of theta at which the parameterized family reproduces the exact
/// solution of the ALM problem.
inline ThetaVector ground_truth_theta(const ModelParams& mp) {
    const double b = mp.b1(), d = mp.d1();
    const double bd = b * b + d * d;
    ThetaVector th;
    th.th1 = mp.a * mp.a * d * d / bd;
    th.th2 = mp.a * (mp.a_bar * d * d - mp.rho * b * mp.c_bar * d) / bd;
    th.th3 = mp.a_bar * b + mp.rho * mp.c_bar * d;
    th.th4 = 1.0 / bd;
    th.th5 = mp.a_bar * mp.a_bar + mp.c_bar * mp.c_bar;
    return th;
}

/// Domain of the parameterization: positive powers/logs and a real
/// feedback coefficient sqrt((a^2 - th1) th4).
inline bool theta_in_domain(const ThetaVector& th, double a_drift) {
    return std::isfinite(th.th1) && std::isfinite(th.th2) && std::isfinite(th.th3) &&
           std::isfinite(th.th4) && std::isfinite(th.th5) && th.th1 > 0.0 &&
           th.th1 <= a_drift * a_drift && th.th2 != 0.0 && th.th4 > 0.0 && th.th5 > 0.0;
}

inline void require_theta(const ThetaVector& th, double a_drift) {
    if (!theta_in_domain(th, a_drift))
        throw std::invalid_argument("theta outside the admissible domain");
}

/// Parameterized value function
///   J(t,x,l) = th1^{T-t} x^2 - 2 th2^{T-t} x l + P22(t) l^2 + const(t),
/// with P22(t) = -sum_{j=t}^{T-1} (th2^2/th1)^{T-j-1} th3^2 th4 th5^{j-t}
/// + th5^{T-t} and const(t) = -(lambda/2) ln th4 (T-t)
/// + (lambda/4) ln th1 (T-t-1)(T-t) + (lambda/2) ln(1/(pi lambda)) (T-t).
inline double value_theta(const ThetaVector& th, int t, double x, double l, int horizon,
                          double lambda) {
    if (t < 0 || t > horizon) throw std::out_of_range("period out of range");
    const int n = horizon - t;
    const double ratio = th.th2 * th.th2 / th.th1;
    double sum = 0.0;
    for (int j = t; j < horizon; ++j)
        sum += ipow(ratio, horizon - j - 1) * th.th3 * th.th3 * th.th4 * ipow(th.th5, j - t);
    const double p22 = -sum + ipow(th.th5, n);
    double v = ipow(th.th1, n) * x * x - 2.0 * ipow(th.th2, n) * x * l + p22 * l * l;
    v += -0.5 * lambda * std::log(th.th4) * n + 0.5 * lambda * std::log(1.0 / (kPi * lambda)) * n;
    if (n > 1) v += 0.25 * lambda * std::log(th.th1) * (n - 1.0) * n;
    return v;
}

struct PolicyMoment {
    double mean = 0.0;
    double variance = 0.0;
};

/// Parameterized Gaussian policy: mean
/// -sqrt((a^2 - th1) th4) x + (th2/th1)^{T-t-1} th3 th4 l and variance
/// (lambda/2) th4 th1^{-(T-t-1)}. At ground truth this is the exact
/// optimal feedback, which fixes every sign and exponent.
inline PolicyMoment policy_theta(const ThetaVector& th, int t, double x, double l, int horizon,
                                 double lambda, double a_drift) {
    if (t < 0 || t >= horizon) throw std::out_of_range("period out of range");
    const double rad = (a_drift * a_drift - th.th1) * th.th4;
    if (rad < 0.0)
        throw std::invalid_argument("negative radicand (a^2 - th1) th4 = " + std::to_string(rad));
    PolicyMoment pm;
    pm.mean = -std::sqrt(rad) * x + ipow(th.th2 / th.th1, horizon - t - 1) * th.th3 * th.th4 * l;
    pm.variance = 0.5 * lambda * th.th4 * ipow(th.th1, -(horizon - t - 1));
    return pm;
}

/// The same policy as per-period feedback gains (mean = -gain . (x,l)').
inline GaussianPolicy theta_policy(const ThetaVector& th, int horizon, double lambda,
                                   double a_drift) {
    require_theta(th, a_drift);
    GaussianPolicy pol;
    for (int t = 0; t < horizon; ++t) {
        Matrix gain(1, 2);
        gain(0, 0) = std::sqrt((a_drift * a_drift - th.th1) * th.th4);
        gain(0, 1) = -ipow(th.th2 / th.th1, horizon - t - 1) * th.th3 * th.th4;
        Matrix cov(1, 1);
        cov(0, 0) = 0.5 * lambda * th.th4 * ipow(th.th1, -(horizon - t - 1));
        pol.gain.push_back(std::move(gain));
        pol.cov.push_back(std::move(cov));
    }
    return pol;
}

/// One observed transition in shifted coordinates.
struct Transition {
    int t = 0;
    double x = 0.0;
    double l = 0.0;
    double x_next = 0.0;
    double l_next = 0.0;
};

/// One-step Bellman residual
/// delta_t = J(t+1, x', l') - J(t, x, l) + lambda int pi ln pi, with the
/// entropy integral in closed form for the theta policy's variance.
inline double bellman_residual(const ThetaVector& th, const Transition& tr, int horizon,
                               double lambda, double a_drift) {
    const double var = policy_theta(th, tr.t, tr.x, tr.l, horizon, lambda, a_drift).variance;
    return value_theta(th, tr.t + 1, tr.x_next, tr.l_next, horizon, lambda) -
           value_theta(th, tr.t, tr.x, tr.l, horizon, lambda) +
           lambda * gaussian_neg_entropy(var);
}

/// d value_theta / d theta at (t, x, l); all five components, including
/// the log-constant terms.
inline std::array<double, 5> value_theta_grad(const ThetaVector& th, int t, double x, double l,
                                              int horizon, double lambda) {
    const int n = horizon - t;
    std::array<double, 5> g{0.0, 0.0, 0.0, 0.0, 0.0};
    if (n > 0) {
        g[0] += n * ipow(th.th1, n - 1) * x * x;
        g[1] += -2.0 * n * ipow(th.th2, n - 1) * x * l;
        g[4] += n * ipow(th.th5, n - 1) * l * l;
        g[3] += -0.5 * lambda * n / th.th4;
    }
    if (n > 1) g[0] += 0.25 * lambda * (n - 1.0) * n / th.th1;
    const double ratio = th.th2 * th.th2 / th.th1;
    for (int j = t; j < horizon; ++j) {
        const int p = horizon - j - 1;
        const double term = ipow(ratio, p) * th.th3 * th.th3 * th.th4 * ipow(th.th5, j - t);
        g[0] += p * term / th.th1 * l * l;
        g[1] += -2.0 * p * term / th.th2 * l * l;
        g[2] += -2.0 * term / th.th3 * l * l;
        g[3] += -term / th.th4 * l * l;
        if (j - t > 0) g[4] += -(j - t) * term / th.th5 * l * l;
    }
    return g;
}

/// lambda * d/d theta of the closed-form entropy integral for the theta
/// policy at period t.
inline std::array<double, 5> entropy_term_grad(const ThetaVector& th, int t, int horizon,
                                               double lambda) {
    std::array<double, 5> g{0.0, 0.0, 0.0, 0.0, 0.0};
    g[0] = 0.5 * lambda * (horizon - t - 1) / th.th1;
    g[3] = -0.5 * lambda / th.th4;
    return g;
}

/// Gradient of L(theta) = (1/2) sum_t delta_t^2 over one episode. This is
/// the exact gradient of the coded residual, so it must agree with
/// central finite differences of the coded loss.
inline std::array<double, 5> grad_theta(const ThetaVector& th, std::span<const Transition> episode,
                                        int horizon, double lambda, double a_drift) {
    std::array<double, 5> g{0.0, 0.0, 0.0, 0.0, 0.0};
    for (const Transition& tr : episode) {
        const double delta = bellman_residual(th, tr, horizon, lambda, a_drift);
        const auto d_next = value_theta_grad(th, tr.t + 1, tr.x_next, tr.l_next, horizon, lambda);
        const auto d_cur = value_theta_grad(th, tr.t, tr.x, tr.l, horizon, lambda);
        const auto d_ent = entropy_term_grad(th, tr.t, horizon, lambda);
        for (int i = 0; i < 5; ++i) g[i] += delta * (d_next[i] - d_cur[i] + d_ent[i]);
    }
    return g;
}

/// Episode loss sum_t delta_t^2.
inline double bellman_sq_error(const ThetaVector& th, std::span<const Transition> episode,
                               int horizon, double lambda, double a_drift) {
    double s = 0.0;
    for (const Transition& tr : episode) {
        const double delta = bellman_residual(th, tr, horizon, lambda, a_drift);
        s += delta * delta;
    }
    return s;
}

/// Multiplier correction gamma <- gamma - eta_gamma (avg x_T + gamma -
/// avg l_T - d), with x_T the shifted terminal wealth.
inline double update_gamma(double gamma, std::span<const double> shifted_x_terminal,
                           std::span<const double> l_terminal, double d, double eta_gamma) {
    if (shifted_x_terminal.empty() || shifted_x_terminal.size() != l_terminal.size())
        throw std::invalid_argument("need matching nonempty terminal samples");
    double ax = 0.0, al = 0.0;
    for (double v : shifted_x_terminal) ax += v;
    for (double v : l_terminal) al += v;
    ax /= static_cast<double>(shifted_x_terminal.size());
    al /= static_cast<double>(l_terminal.size());
    return gamma - eta_gamma * (ax + gamma - al - d);
}

enum class GradMode {
    raw,        // theta <- theta - eta * grad (documented default)
    normalized  // bounded relative steps with 1/sqrt(k) decay
};

struct TrainConfig {
    double eta = 1e-20;
    double eta_gamma = 0.05;
    int episodes = 5000;
    int batch = 50;  // sample-average size for the gamma update
    double d = 1.4;
    std::uint64_t seed = 1;
    double lambda = 0.1;
    GradMode grad_mode = GradMode::raw;
    double eta_norm = 1e-3;
    double theta_perturb = 0.2;  // multiplicative init perturbation range
    std::optional<std::array<double, 5>> theta_manual;
    double gamma_init = 0.0;
    double x0 = 1.0;
    double l0 = 0.1;

    void validate() const {
        // Zero rates are allowed: they freeze the corresponding learner.
        if (!(eta >= 0.0) || !(eta_gamma >= 0.0))
            throw ConfigError("learning rates must be nonnegative");
        if (batch < 1) throw ConfigError("batch must be at least 1");
        if (episodes < batch) throw ConfigError("episodes must be at least the batch size");
        if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
        if (theta_perturb < 0.0 || theta_perturb >= 1.0)
            throw ConfigError("theta_perturb must lie in [0, 1)");
    }
};

struct TrainLogRow {
    int episode = 0;  // 1-based
    double terminal_wealth = 0.0;
    double terminal_liability = 0.0;
    double gamma = 0.0;
    double bellman_sq_error = 0.0;
    std::array<double, 5> theta{};
};

struct TrainResult {
    ThetaVector theta;
    std::vector<TrainLogRow> log;
    int rejected_steps = 0;   // episodes where at least one halving happened
    int total_halvings = 0;
};

/// Stream tag for the theta-initialization draw, separate from every
/// episode stream.
inline constexpr std::uint64_t kThetaInitStream = 0x8000000000000000ull;

/// Initial theta: ground truth perturbed multiplicatively by (1 + u),
/// u ~ U[-perturb, perturb] per component, th1 clamped into the policy
/// domain (th1 <= a^2).
inline ThetaVector initial_theta(const ModelParams& mp, const TrainConfig& cfg) {
    ThetaVector th = ground_truth_theta(mp);
    if (cfg.theta_manual) {
        th.set_coeffs(*cfg.theta_manual);
    } else if (cfg.theta_perturb > 0.0) {
        Rng rng(episode_seed(cfg.seed, kThetaInitStream));
        auto c = th.coeffs();
        for (double& v : c) v *= 1.0 + cfg.theta_perturb * (2.0 * rng.next_uniform() - 1.0);
        th.set_coeffs(c);
    }
    th.th1 = std::min(th.th1, mp.a * mp.a * (1.0 - 1e-12));
    th.gamma = cfg.gamma_init;
    require_theta(th, mp.a);
    return th;
}

/// Episode-by-episode training loop: simulate one path under the current
/// theta policy, take one SGD step on the squared Bellman residual,
/// correct gamma every `batch` episodes from the most recent terminal
/// samples. Strictly sequential; deterministic given the seed.
inline TrainResult train(const ModelParams& mp, int periods, const TrainConfig& cfg) {
    mp.validate();
    cfg.validate();
    if (!mp.scalar_control() || mp.c != 0.0)
        throw std::invalid_argument("training expects the scalar-control ALM model");

    ModelParams params = mp;
    params.lambda = cfg.lambda;

    TrainResult res;
    res.theta = initial_theta(params, cfg);
    res.log.reserve(static_cast<std::size_t>(cfg.episodes));

    std::vector<double> recent_xT, recent_lT;
    recent_xT.reserve(static_cast<std::size_t>(cfg.batch));
    recent_lT.reserve(static_cast<std::size_t>(cfg.batch));

    std::vector<Transition> transitions(static_cast<std::size_t>(periods));
    for (int k = 0; k < cfg.episodes; ++k) {
        Rng rng(episode_seed(cfg.seed, static_cast<std::uint64_t>(k)));
        const GaussianPolicy pol = theta_policy(res.theta, periods, cfg.lambda, params.a);
        const EpisodePath path =
            simulate_episode(params, periods, pol, cfg.x0, cfg.l0, res.theta.gamma, rng);

        for (int t = 0; t < periods; ++t) {
            Transition& tr = transitions[static_cast<std::size_t>(t)];
            tr.t = t;
            tr.x = shift_state(path.wealth[static_cast<std::size_t>(t)], res.theta.gamma, params.a,
                               periods - t);
            tr.l = path.liability[static_cast<std::size_t>(t)];
            tr.x_next = shift_state(path.wealth[static_cast<std::size_t>(t) + 1], res.theta.gamma,
                                    params.a, periods - t - 1);
            tr.l_next = path.liability[static_cast<std::size_t>(t) + 1];
        }

        const double loss = bellman_sq_error(res.theta, transitions, periods, cfg.lambda, params.a);
        const auto grad = grad_theta(res.theta, transitions, periods, cfg.lambda, params.a);

        // One SGD step; a step leaving the domain is retried at half the
        // rate, up to 60 halvings.
        const auto cur = res.theta.coeffs();
        double scale = 1.0;
        int halvings = 0;
        for (;; ++halvings) {
            if (halvings > 60)
                throw DivergenceError("step rejected after 60 halvings at episode " +
                                      std::to_string(k + 1));
            std::array<double, 5> cand{};
            for (int i = 0; i < 5; ++i) {
                double step;
                if (cfg.grad_mode == GradMode::raw) {
                    step = cfg.eta * grad[i];
                } else {
                    const double lr = cfg.eta_norm / std::sqrt(static_cast<double>(k) + 1.0);
                    const double gh = grad[i] * std::abs(cur[i]);
                    step = lr * std::abs(cur[i]) * gh / (1.0 + std::abs(gh));
                }
                cand[i] = cur[i] - scale * step;
            }
            ThetaVector trial = res.theta;
            trial.set_coeffs(cand);
            if (theta_in_domain(trial, params.a)) {
                res.theta = trial;
                break;
            }
            scale *= 0.5;
        }
        if (halvings > 0) {
            ++res.rejected_steps;
            res.total_halvings += halvings;
            std::cerr << "episode " << (k + 1) << ": step halved " << halvings << "x to stay in domain\n";
        }

        const double xT_shifted = shift_state(path.wealth.back(), res.theta.gamma, params.a, 0);
        recent_xT.push_back(xT_shifted);
        recent_lT.push_back(path.liability.back());
        if (static_cast<int>(recent_xT.size()) == cfg.batch) {
            res.theta.gamma =
                update_gamma(res.theta.gamma, recent_xT, recent_lT, cfg.d, cfg.eta_gamma);
            recent_xT.clear();
            recent_lT.clear();
        }

        TrainLogRow row;
        row.episode = k + 1;
        row.terminal_wealth = path.wealth.back();
        row.terminal_liability = path.liability.back();
        row.gamma = res.theta.gamma;
        row.bellman_sq_error = loss;
        row.theta = res.theta.coeffs();
        res.log.push_back(row);
    }
    return res;
}

}  // namespace explq
