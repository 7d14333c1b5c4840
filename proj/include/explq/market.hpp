#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "explq/errors.hpp"
#include "explq/lq.hpp"
#include "explq/model.hpp"
#include "explq/mv_alm_shift.hpp"
#include "explq/rng.hpp"

namespace explq {

/// Annual market description; everything downstream works per period.
struct AnnualMarket {
    double rf_annual = 1.05;
    double risky_return_annual = 1.30;
    double risky_vol_annual = 0.2;
    double liability_growth_annual = 1.1;
    double liability_vol_annual = 0.1;
    double rho = 0.2;
    double dt = 1.0 / 12.0;
    double horizon_years = 1.0;

    void validate() const {
        if (!(rf_annual > 1.0)) throw ConfigError("rf_annual must exceed 1");
        if (!(dt > 0.0)) throw ConfigError("dt must be positive");
        if (!(horizon_years > 0.0)) throw ConfigError("horizon_years must be positive");
        if (!(std::abs(rho) <= 1.0)) throw ConfigError("|rho| must be <= 1");
        if (risky_vol_annual < 0.0 || liability_vol_annual < 0.0)
            throw ConfigError("volatilities must be nonnegative");
    }
};

struct DiscretizedMarket {
    ModelParams params;  // ALM form: c = 0, scalar control
    int periods = 0;
};

/// Per-period coefficients: geometric drifts scale by dt as a power,
/// volatilities by sqrt(dt), the excess return linearly. The rule lives
/// here alone so an alternate discretization can be swapped in.
inline DiscretizedMarket discretize(const AnnualMarket& am, double lambda) {
    am.validate();
    const double raw_periods = am.horizon_years / am.dt;
    const double rounded = std::round(raw_periods);
    if (std::abs(raw_periods - rounded) > 1e-9 || rounded < 1.0)
        throw ConfigError("horizon_years / dt is not an integer period count (residual " +
                          std::to_string(raw_periods - rounded) + ")");

    DiscretizedMarket dm;
    dm.periods = static_cast<int>(rounded);
    dm.params.a = std::pow(am.rf_annual, am.dt);
    dm.params.b = {(am.risky_return_annual - am.rf_annual) * am.dt};
    dm.params.c = 0.0;
    dm.params.d = {am.risky_vol_annual * std::sqrt(am.dt)};
    dm.params.a_bar = std::pow(am.liability_growth_annual, am.dt);
    dm.params.c_bar = am.liability_vol_annual * std::sqrt(am.dt);
    dm.params.rho = am.rho;
    dm.params.lambda = lambda;
    dm.params.q_terminal = Matrix::sym2(1.0, -1.0, 1.0);
    return dm;
}

struct NoiseDraw {
    double wx = 0.0;
    double wy = 0.0;
};

/// Correlated pair of unit-variance noises. wx is drawn first and wy
/// conditionally, so rho = +-1 is exact. Two normals are always consumed,
/// keeping the stream layout independent of rho.
inline NoiseDraw draw_noise(Rng& rng, double rho) {
    NoiseDraw n;
    n.wx = rng.next_normal();
    const double z = rng.next_normal();
    n.wy = rho * n.wx + std::sqrt(std::max(0.0, 1.0 - rho * rho)) * z;
    return n;
}

/// One simulated trajectory. States have periods+1 entries, controls and
/// noises have periods entries; wealth is recorded raw (unshifted).
struct EpisodePath {
    std::vector<double> wealth;     // X_t
    std::vector<double> liability;  // l_t
    std::vector<double> control;    // u_t
    std::vector<NoiseDraw> noise;
    double terminal_surplus = 0.0;

    int periods() const { return static_cast<int>(control.size()); }
};

/// Simulate under a scalar-control Gaussian feedback policy evaluated at
/// the shifted state (x_t, l_t) = (X_t - gamma rf^{-(T-t)}, l_t). A zero
/// covariance entry makes the control deterministic at its mean.
inline EpisodePath simulate_episode(const ModelParams& mp, int periods, const GaussianPolicy& policy,
                                    double x0, double l0, double gamma, Rng& rng) {
    if (policy.horizon() != periods)
        throw ConfigError("policy horizon does not match the period count");
    if (policy.control_dim() != 1)
        throw ConfigError("episode simulation expects a scalar-control policy");

    const double a = mp.a, b = mp.b1(), d = mp.d1();
    EpisodePath path;
    path.wealth.reserve(static_cast<std::size_t>(periods) + 1);
    path.liability.reserve(static_cast<std::size_t>(periods) + 1);
    path.control.reserve(static_cast<std::size_t>(periods));
    path.noise.reserve(static_cast<std::size_t>(periods));

    double X = x0, l = l0;
    for (int t = 0; t < periods; ++t) {
        path.wealth.push_back(X);
        path.liability.push_back(l);

        const std::size_t u = static_cast<std::size_t>(t);
        const double x_sh = shift_state(X, gamma, a, periods - t);
        const double mean = -(policy.gain[u](0, 0) * x_sh + policy.gain[u](0, 1) * l);
        const double var = policy.cov[u](0, 0);
        const double ctrl = var > 0.0 ? mean + std::sqrt(var) * rng.next_normal() : mean;
        const NoiseDraw nd = draw_noise(rng, mp.rho);

        path.control.push_back(ctrl);
        path.noise.push_back(nd);
        X = a * X + b * ctrl + d * ctrl * nd.wx;
        l = mp.a_bar * l + mp.c_bar * l * nd.wy;
    }
    path.wealth.push_back(X);
    path.liability.push_back(l);
    path.terminal_surplus = X - l;
    return path;
}

}  // namespace explq
