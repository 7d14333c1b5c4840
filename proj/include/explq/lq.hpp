#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "explq/errors.hpp"
#include "explq/matrix.hpp"
#include "explq/model.hpp"

namespace explq {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

/// Exact value of the Gaussian self-information integral
/// int pi ln pi du = -(1/2) ln((2 pi e)^m |cov|).
inline double gaussian_neg_entropy(const Matrix& cov) {
    if (cov.rows() != cov.cols()) throw std::invalid_argument("covariance must be square");
    if (!cov.is_symmetric()) throw std::invalid_argument("covariance must be symmetric");
    const auto chol = cholesky_lower(cov);
    if (!chol) throw std::invalid_argument("covariance must be positive definite");
    const double m = static_cast<double>(cov.rows());
    return -0.5 * (m * std::log(2.0 * kPi * std::exp(1.0)) + log_det_from_cholesky(*chol));
}

/// Scalar overload for one-dimensional controls.
inline double gaussian_neg_entropy(double variance) {
    if (!(variance > 0.0)) throw std::invalid_argument("variance must be positive");
    return -0.5 * std::log(2.0 * kPi * std::exp(1.0) * variance);
}

/// One-step coefficients of the conditional expectation of a quadratic
/// form under the model dynamics: for symmetric 2x2 P,
///
///   E[(x',y')' P (x',y') | x, y, u-density]
///     = (x,y)' F (x,y) + 2 (x,y)' H E[u] + tr(G E[u u'])
///
/// with F 2x2, H 2xm, G mxm.
struct StageCoeffs {
    Matrix f;  // 2x2
    Matrix h;  // 2xm
    Matrix g;  // mxm
};

inline StageCoeffs stage_coeffs(const Matrix& p, const ModelParams& mp) {
    const std::size_t m = mp.b.size();
    StageCoeffs s{Matrix(2, 2), Matrix(2, m), Matrix(m, m)};

    const double p11 = p(0, 0), p12 = p(0, 1), p21 = p(1, 0), p22 = p(1, 1);
    s.f(0, 0) = (mp.a * mp.a + mp.c * mp.c) * p11;
    s.f(0, 1) = (mp.a * mp.a_bar + mp.c * mp.c_bar) * p12;
    s.f(1, 0) = (mp.a * mp.a_bar + mp.c * mp.c_bar) * p21;
    s.f(1, 1) = (mp.a_bar * mp.a_bar + mp.c_bar * mp.c_bar) * p22;

    for (std::size_t j = 0; j < m; ++j) {
        s.h(0, j) = p11 * (mp.a * mp.b[j] + mp.c * mp.d[j]);
        s.h(1, j) = p21 * (mp.a_bar * mp.b[j] + mp.rho * mp.c_bar * mp.d[j]);
    }
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            s.g(i, j) = p11 * (mp.b[i] * mp.b[j] + mp.d[i] * mp.d[j]);
    return s;
}

/// E[(x',y')' P (x',y') | state, control density with the given first and
/// second moments]. Exact; the only distributional inputs are E[u] and
/// E[u u'].
inline double propagate_quadratic(const Matrix& p, const ModelParams& mp, StateVec state,
                                  const Matrix& u_mean, const Matrix& u_second_moment) {
    if (p.rows() != 2 || p.cols() != 2) throw std::invalid_argument("P must be 2x2");
    if (!p.is_symmetric()) throw std::invalid_argument("P must be symmetric");
    const std::size_t m = mp.b.size();
    if (u_mean.rows() != m || u_mean.cols() != 1)
        throw std::invalid_argument("u_mean must be an m-vector");
    if (u_second_moment.rows() != m || u_second_moment.cols() != m)
        throw std::invalid_argument("u second moment must be mxm");

    const StageCoeffs s = stage_coeffs(p, mp);
    const double quad = s.f(0, 0) * state.x * state.x +
                        (s.f(0, 1) + s.f(1, 0)) * state.x * state.y +
                        s.f(1, 1) * state.y * state.y;
    double cross = 0.0;
    for (std::size_t j = 0; j < m; ++j)
        cross += (state.x * s.h(0, j) + state.y * s.h(1, j)) * u_mean(j, 0);
    return quad + 2.0 * cross + trace_product(s.g, u_second_moment);
}

/// Backward-recursion stage: P_t = F_t - H_t G_t^{-1} H_t' with terminal
/// P_T = q_terminal, plus the accumulated value-function constant
/// (lambda/2) sum_{k=t}^{T-1} ln[(1/(pi lambda))^m |G_k|].
struct RiccatiStage {
    int t = 0;
    Matrix p;              // 2x2 symmetric
    Matrix f;              // 2x2
    Matrix h;              // 2xm
    Matrix g;              // mxm symmetric positive definite
    Matrix gain;           // mx2, G^{-1} H'
    double log_det_g = 0.0;
    double entropy_const = 0.0;
};

struct LqSolution {
    ModelParams params;
    std::vector<RiccatiStage> stages;  // indexed by t = 0 .. T-1

    int horizon() const { return static_cast<int>(stages.size()); }
};

/// Per-period Gaussian feedback law: mean(t, s) = -gain_t * s, covariance
/// cov_t. A zero covariance is allowed and means a degenerate
/// (deterministic-mean) policy.
struct GaussianPolicy {
    std::vector<Matrix> gain;  // mx2 per period
    std::vector<Matrix> cov;   // mxm per period

    int horizon() const { return static_cast<int>(gain.size()); }
    int control_dim() const { return gain.empty() ? 0 : static_cast<int>(gain.front().rows()); }
};

inline LqSolution riccati_backward(const ModelParams& mp, int horizon) {
    mp.validate();
    if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");

    LqSolution sol;
    sol.params = mp;
    sol.stages.resize(static_cast<std::size_t>(horizon));

    const double m = static_cast<double>(mp.b.size());
    Matrix p = mp.q_terminal;
    double entropy_const = 0.0;
    for (int t = horizon - 1; t >= 0; --t) {
        RiccatiStage st;
        st.t = t;
        StageCoeffs sc = stage_coeffs(p, mp);

        const auto chol = cholesky_lower(sc.g);
        if (!chol) throw SingularGainError(t, "G_t is not symmetric positive definite");
        const auto ginv = gauss_inverse(sc.g);
        if (!ginv) throw SingularGainError(t, "pivot under tolerance while inverting G_t");

        st.f = sc.f;
        st.h = sc.h;
        st.g = sc.g;
        st.g.symmetrize();
        st.gain = *ginv * sc.h.transposed();
        st.log_det_g = log_det_from_cholesky(*chol);

        Matrix next_p = sc.f - sc.h * st.gain;
        next_p.symmetrize();
        st.p = next_p;

        entropy_const += 0.5 * mp.lambda * (m * std::log(1.0 / (kPi * mp.lambda)) + st.log_det_g);
        st.entropy_const = entropy_const;

        sol.stages[static_cast<std::size_t>(t)] = std::move(st);
        p = next_p;
    }
    return sol;
}

/// Optimal value (x,y)' P_t (x,y) + entropy const; at t = T the terminal
/// quadratic with zero constant.
inline double optimal_value(const LqSolution& sol, int t, StateVec s) {
    const int T = sol.horizon();
    if (t < 0 || t > T) throw std::out_of_range("period out of range");
    const Matrix& p = (t == T) ? sol.params.q_terminal : sol.stages[static_cast<std::size_t>(t)].p;
    const double quad = p(0, 0) * s.x * s.x + 2.0 * p(0, 1) * s.x * s.y + p(1, 1) * s.y * s.y;
    const double c = (t == T) ? 0.0 : sol.stages[static_cast<std::size_t>(t)].entropy_const;
    return quad + c;
}

struct PolicyEntry {
    Matrix gain;  // mx2
    Matrix cov;   // mxm
};

/// Optimal Gaussian feedback at period t: mean -G^{-1}H' (x,y)',
/// covariance (lambda/2) G^{-1}.
inline PolicyEntry optimal_policy(const LqSolution& sol, int t) {
    if (t < 0 || t >= sol.horizon()) throw std::out_of_range("period out of range");
    const RiccatiStage& st = sol.stages[static_cast<std::size_t>(t)];
    const auto ginv = gauss_inverse(st.g);
    if (!ginv) throw SingularGainError(t, "G_t not invertible");
    Matrix cov = *ginv * (0.5 * sol.params.lambda);
    cov.symmetrize();
    return PolicyEntry{st.gain, std::move(cov)};
}

/// Full optimal policy over the horizon.
inline GaussianPolicy optimal_policy(const LqSolution& sol) {
    GaussianPolicy pol;
    pol.gain.reserve(sol.stages.size());
    pol.cov.reserve(sol.stages.size());
    for (int t = 0; t < sol.horizon(); ++t) {
        PolicyEntry e = optimal_policy(sol, t);
        pol.gain.push_back(std::move(e.gain));
        pol.cov.push_back(std::move(e.cov));
    }
    return pol;
}

}  // namespace explq
