#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "explq/closed_form.hpp"
#include "explq/errors.hpp"
#include "explq/lq.hpp"
#include "explq/model.hpp"

namespace explq {

/// Gaussian feedback seed: mean = k . (x, l)', per-period variance
/// lambda * l_scale * n_base^{T-t-1}.
struct SeedPolicy {
    std::array<double, 2> k{0.0, 0.0};
    double l_scale = 1.0;
    double n_base = 1.0;
};

/// Per-period quadratic-plus-constant value of some feedback policy:
/// J(t, x, l) = m11 x^2 + 2 m12 x l + m22 l^2 + c. Arrays run t = 0..T
/// with the terminal row fixed at (x - l)^2.
struct PolicyValue {
    std::vector<double> m11, m12, m22, c;

    int horizon() const { return static_cast<int>(m11.size()) - 1; }
    double at(int t, double x, double l) const {
        const std::size_t u = static_cast<std::size_t>(t);
        return m11[u] * x * x + 2.0 * m12[u] * x * l + m22[u] * l * l + c[u];
    }
};

inline void require_alm_params(const ModelParams& mp) {
    mp.validate();
    if (!mp.scalar_control()) throw std::invalid_argument("policy iteration requires a scalar control");
    if (mp.c != 0.0) throw std::invalid_argument("policy iteration requires c = 0");
}

/// Exact value of a SeedPolicy by one backward sweep. The off-diagonal
/// entry is kept symmetrized at every step; only m12 + m21 enters the
/// value, and the cross coefficient that feeds the next step is the
/// symmetric one.
inline PolicyValue evaluate_seed_policy(const ModelParams& mp, const SeedPolicy& seed, int horizon) {
    require_alm_params(mp);
    if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
    if (!(seed.l_scale > 0.0) || !(seed.n_base > 0.0))
        throw std::invalid_argument("seed variance scales must be positive");

    const double a = mp.a, b = mp.b1(), d = mp.d1();
    const double bd = b * b + d * d;
    const double hy = mp.a_bar * b + mp.rho * mp.c_bar * d;
    const double growth2 = mp.a_bar * mp.a_bar + mp.c_bar * mp.c_bar;
    const double k1 = seed.k[0], k2 = seed.k[1];

    PolicyValue v;
    const std::size_t n = static_cast<std::size_t>(horizon) + 1;
    v.m11.assign(n, 0.0);
    v.m12 = v.m11;
    v.m22 = v.m11;
    v.c = v.m11;
    v.m11[n - 1] = 1.0;
    v.m12[n - 1] = -1.0;
    v.m22[n - 1] = 1.0;

    for (int t = horizon - 1; t >= 0; --t) {
        const std::size_t u = static_cast<std::size_t>(t);
        const double m11 = v.m11[u + 1], m12 = v.m12[u + 1], m22 = v.m22[u + 1];
        const double var = mp.lambda * seed.l_scale * std::pow(seed.n_base, horizon - t - 1);

        v.m11[u] = (a * a + 2.0 * a * b * k1 + bd * k1 * k1) * m11;
        v.m12[u] = (a * mp.a_bar + hy * k1) * m12 + (a * b * k2 + bd * k1 * k2) * m11;
        v.m22[u] = growth2 * m22 + 2.0 * hy * k2 * m12 + bd * k2 * k2 * m11;
        v.c[u] = v.c[u + 1] + bd * m11 * var + mp.lambda * gaussian_neg_entropy(var);
    }
    return v;
}

/// Closed-form constant part of the seed-policy value; the n_base*mbar = 1
/// geometric-sum singularity is removable and replaced by its limit.
inline double seed_value_constant(const ModelParams& mp, const SeedPolicy& seed, int horizon, int t) {
    require_alm_params(mp);
    const double b = mp.b1(), d = mp.d1();
    const double bd = b * b + d * d;
    const double mbar = mp.a * mp.a + 2.0 * mp.a * b * seed.k[0] + bd * seed.k[0] * seed.k[0];
    const double L = seed.l_scale, N = seed.n_base;
    const double n = static_cast<double>(horizon - t);

    double geo;
    if (std::abs(N * mbar - 1.0) < 1e-12) {
        geo = n * mp.lambda * L * bd;
    } else {
        geo = mp.lambda * L * bd * (1.0 - std::pow(N * mbar, n)) / (1.0 - N * mbar);
    }
    return geo - 0.5 * mp.lambda * std::log(2.0 * kPi * mp.lambda * L) * n - 0.5 * mp.lambda * n -
           0.5 * mp.lambda * std::log(N) * (n - 1.0) * n / 2.0;
}

/// Scalar-control Gaussian feedback with mean = -(gain_x x + gain_y l).
/// The seed's mean is +k.(x,l)', hence the sign flip.
inline GaussianPolicy to_policy(const SeedPolicy& seed, const ModelParams& mp, int horizon) {
    GaussianPolicy pol;
    for (int t = 0; t < horizon; ++t) {
        Matrix gain(1, 2);
        gain(0, 0) = -seed.k[0];
        gain(0, 1) = -seed.k[1];
        Matrix cov(1, 1);
        cov(0, 0) = mp.lambda * seed.l_scale * std::pow(seed.n_base, horizon - t - 1);
        pol.gain.push_back(std::move(gain));
        pol.cov.push_back(std::move(cov));
    }
    return pol;
}

struct ImproveResult {
    GaussianPolicy policy;
    PolicyValue value;
};

/// One policy-improvement sweep: at every period, replace the policy by
/// the Gaussian minimizer of the one-step functional built from the
/// current value, and the value by the corresponding backup
/// F - H G^{-1} H'. The new value never exceeds the old one anywhere.
inline ImproveResult improve(const ModelParams& mp, const PolicyValue& current) {
    require_alm_params(mp);
    const int T = current.horizon();
    const double a = mp.a, b = mp.b1(), d = mp.d1();
    const double bd = b * b + d * d;
    const double hy_coef = mp.a_bar * b + mp.rho * mp.c_bar * d;
    const double growth2 = mp.a_bar * mp.a_bar + mp.c_bar * mp.c_bar;

    ImproveResult res;
    PolicyValue& v = res.value;
    const std::size_t n = static_cast<std::size_t>(T) + 1;
    v.m11.assign(n, 0.0);
    v.m12 = v.m11;
    v.m22 = v.m11;
    v.c = v.m11;
    v.m11[n - 1] = 1.0;
    v.m12[n - 1] = -1.0;
    v.m22[n - 1] = 1.0;
    res.policy.gain.assign(static_cast<std::size_t>(T), Matrix(1, 2));
    res.policy.cov.assign(static_cast<std::size_t>(T), Matrix(1, 1));

    for (int t = T - 1; t >= 0; --t) {
        const std::size_t u = static_cast<std::size_t>(t);
        const double m11 = current.m11[u + 1], m12 = current.m12[u + 1], m22 = current.m22[u + 1];
        const double G = bd * m11;
        if (!(G > 0.0)) throw SingularGainError(t, "nonpositive G in improvement step");
        const double H1 = a * b * m11;
        const double H2 = hy_coef * m12;

        res.policy.gain[u](0, 0) = H1 / G;
        res.policy.gain[u](0, 1) = H2 / G;
        res.policy.cov[u](0, 0) = 0.5 * mp.lambda / G;

        v.m11[u] = a * a * m11 - H1 * H1 / G;
        v.m12[u] = a * mp.a_bar * m12 - H1 * H2 / G;
        v.m22[u] = growth2 * m22 - H2 * H2 / G;
        v.c[u] = current.c[u + 1] + 0.5 * mp.lambda * std::log(G / (kPi * mp.lambda));
    }
    return res;
}

/// Optimal value in PolicyValue form, for gap measurements.
inline PolicyValue optimal_policy_value(const ClosedFormSolution& cf) {
    PolicyValue v;
    v.m11.assign(cf.p11.begin(), cf.p11.end());
    v.m12.assign(cf.p12.begin(), cf.p12.end());
    v.m22.assign(cf.p22.begin(), cf.p22.end());
    v.c.assign(cf.value_const.begin(), cf.value_const.end());
    return v;
}

}  // namespace explq
