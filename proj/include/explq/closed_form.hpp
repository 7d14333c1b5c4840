#pragma once

#include <cmath>
#include <vector>

#include "explq/errors.hpp"
#include "explq/lq.hpp"
#include "explq/model.hpp"

namespace explq {

/// Exact per-period solution for the scalar-control problem with terminal
/// weight [[1,-1],[-1,1]]. Every power of a per-step base is built by
/// iterated multiplication inside one backward pass so the numbers stay
/// consistent with the general recursion they must reproduce.
///
/// Index conventions: p11/p12/p22/value_const have T+1 entries (t = 0..T,
/// terminal included); g/gain_x/gain_y have T entries (controls stop at
/// T-1).
struct ClosedFormSolution {
    int horizon = 0;
    std::vector<double> p11, p12, p22;
    std::vector<double> g, gain_x, gain_y;
    std::vector<double> value_const;

    double value(int t, double x, double y) const {
        return p11[static_cast<std::size_t>(t)] * x * x +
               2.0 * p12[static_cast<std::size_t>(t)] * x * y +
               p22[static_cast<std::size_t>(t)] * y * y +
               value_const[static_cast<std::size_t>(t)];
    }
    double policy_mean(int t, double x, double y) const {
        return -(gain_x[static_cast<std::size_t>(t)] * x + gain_y[static_cast<std::size_t>(t)] * y);
    }
    double policy_variance(int t, double lambda) const {
        return 0.5 * lambda / g[static_cast<std::size_t>(t)];
    }
};

namespace detail {

struct ClosedFormBases {
    double base11 = 0.0;   // per-step factor of P_{t,11}
    double base12 = 0.0;   // per-step factor of -P_{t,12}
    double ratio = 0.0;    // base of the P_{t,22} sum, = base12^2 / base11
    double weight = 0.0;   // (a_bar b + rho c_bar d)^2 / (b^2 + d^2)
    double growth2 = 0.0;  // a_bar^2 + c_bar^2
};

inline ClosedFormSolution assemble(const ModelParams& mp, int horizon, const ClosedFormBases& bs,
                                   bool gain_y_by_power_base, double gain_y_power_base) {
    const double bd = mp.b1() * mp.b1() + mp.d1() * mp.d1();
    const double hy = mp.a_bar * mp.b1() + mp.rho * mp.c_bar * mp.d1();
    const int T = horizon;

    ClosedFormSolution cf;
    cf.horizon = T;
    cf.p11.assign(static_cast<std::size_t>(T) + 1, 0.0);
    cf.p12 = cf.p11;
    cf.p22 = cf.p11;
    cf.value_const = cf.p11;
    cf.g.assign(static_cast<std::size_t>(T), 0.0);
    cf.gain_x = cf.g;
    cf.gain_y = cf.g;

    cf.p11[static_cast<std::size_t>(T)] = 1.0;
    cf.p12[static_cast<std::size_t>(T)] = -1.0;
    cf.p22[static_cast<std::size_t>(T)] = 1.0;

    double ratio_pow = 1.0;  // ratio^{T-t-1}, starting at t = T-1
    for (int t = T - 1; t >= 0; --t) {
        const std::size_t u = static_cast<std::size_t>(t);
        cf.p11[u] = bs.base11 * cf.p11[u + 1];
        cf.p12[u] = bs.base12 * cf.p12[u + 1];
        cf.p22[u] = bs.growth2 * cf.p22[u + 1] - bs.weight * ratio_pow;
        if (t > 0) ratio_pow *= bs.ratio;
    }

    double gy_pow = 1.0;  // gain_y power factor at t = T-1
    for (int t = T - 1; t >= 0; --t) {
        const std::size_t u = static_cast<std::size_t>(t);
        cf.g[u] = bd * cf.p11[u + 1];
        cf.gain_x[u] = (mp.a * mp.b1() + mp.c * mp.d1()) / bd;
        if (gain_y_by_power_base) {
            cf.gain_y[u] = -gy_pow * hy / bd;
            gy_pow *= gain_y_power_base;
        } else {
            cf.gain_y[u] = (cf.p12[u + 1] / cf.p11[u + 1]) * hy / bd;
        }
    }

    // Value constant in its displayed closed form: linear and quadratic
    // polynomials of T-t multiplying fixed logarithms.
    for (int t = 0; t < T; ++t) {
        const double n = static_cast<double>(T - t);
        double v = 0.5 * mp.lambda * std::log(1.0 / (kPi * mp.lambda)) * n +
                   0.5 * mp.lambda * std::log(bd) * n;
        if (T - t > 1) v += 0.25 * mp.lambda * std::log(bs.base11) * (n - 1.0) * n;
        cf.value_const[static_cast<std::size_t>(t)] = v;
    }
    return cf;
}

}  // namespace detail

/// General scalar-control closed form (state diffusion c allowed).
inline ClosedFormSolution closed_form_general(const ModelParams& mp, int horizon) {
    mp.validate();
    if (!mp.scalar_control()) throw std::invalid_argument("closed form requires a scalar control");
    if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
    const double bd = mp.b1() * mp.b1() + mp.d1() * mp.d1();
    if (!(bd > 0.0)) throw SingularGainError(horizon - 1, "b^2 + d^2 must be positive");

    detail::ClosedFormBases bs;
    const double hx = mp.a * mp.b1() + mp.c * mp.d1();
    const double hy = mp.a_bar * mp.b1() + mp.rho * mp.c_bar * mp.d1();
    bs.base11 = mp.a * mp.a + mp.c * mp.c - hx * hx / bd;
    if (horizon > 1 && !(bs.base11 > 0.0))
        throw SingularGainError(horizon - 2, "G_t vanishes beyond one step (a d = b c)");
    bs.base12 = mp.a * mp.a_bar + mp.c * mp.c_bar - hy * hx / bd;
    bs.ratio = horizon > 1 ? bs.base12 * bs.base12 / bs.base11 : 0.0;
    bs.weight = hy * hy / bd;
    bs.growth2 = mp.a_bar * mp.a_bar + mp.c_bar * mp.c_bar;
    return detail::assemble(mp, horizon, bs, /*gain_y_by_power_base=*/false, 0.0);
}

/// ALM specialization (c = 0): the same entries expressed through
/// a^2 d^2/(b^2+d^2) and the signed power base (a_bar d - rho b c_bar)/(a d).
inline ClosedFormSolution closed_form_alm(const ModelParams& mp, int horizon) {
    mp.validate();
    if (!mp.scalar_control()) throw std::invalid_argument("closed form requires a scalar control");
    if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
    if (mp.c != 0.0) throw std::invalid_argument("ALM closed form requires c = 0");
    if (mp.d1() == 0.0)
        throw DegenerateDiffusionError("d = 0: liability-gain power base (a_bar d - rho b c_bar)/(a d) undefined");
    const double bd = mp.b1() * mp.b1() + mp.d1() * mp.d1();
    if (!(bd > 0.0)) throw SingularGainError(horizon - 1, "b^2 + d^2 must be positive");

    const double b = mp.b1(), d = mp.d1();
    detail::ClosedFormBases bs;
    bs.base11 = mp.a * mp.a * d * d / bd;
    if (horizon > 1 && !(bs.base11 > 0.0))
        throw SingularGainError(horizon - 2, "G_t vanishes beyond one step (a d = 0)");
    bs.base12 = mp.a * (mp.a_bar * d * d - mp.rho * b * mp.c_bar * d) / bd;
    bs.ratio = (mp.a_bar * d - mp.rho * b * mp.c_bar) * (mp.a_bar * d - mp.rho * b * mp.c_bar) / bd;
    bs.weight = (mp.a_bar * b + mp.rho * mp.c_bar * d) * (mp.a_bar * b + mp.rho * mp.c_bar * d) / bd;
    bs.growth2 = mp.a_bar * mp.a_bar + mp.c_bar * mp.c_bar;
    const double gy_base = (mp.a_bar * d - mp.rho * b * mp.c_bar) / (mp.a * d);
    return detail::assemble(mp, horizon, bs, /*gain_y_by_power_base=*/true, gy_base);
}

/// The closed-form policy packaged as a per-period Gaussian feedback law.
inline GaussianPolicy to_policy(const ClosedFormSolution& cf, double lambda) {
    GaussianPolicy pol;
    pol.gain.reserve(static_cast<std::size_t>(cf.horizon));
    pol.cov.reserve(static_cast<std::size_t>(cf.horizon));
    for (int t = 0; t < cf.horizon; ++t) {
        Matrix gain(1, 2);
        gain(0, 0) = cf.gain_x[static_cast<std::size_t>(t)];
        gain(0, 1) = cf.gain_y[static_cast<std::size_t>(t)];
        Matrix cov(1, 1);
        cov(0, 0) = cf.policy_variance(t, lambda);
        pol.gain.push_back(std::move(gain));
        pol.cov.push_back(std::move(cov));
    }
    return pol;
}

}  // namespace explq
