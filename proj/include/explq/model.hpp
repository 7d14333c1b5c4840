#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "explq/matrix.hpp"

namespace explq {

/// Coefficients of the two-dimensional controlled system
///
///   x_{t+1} = a x_t + b u_t + (c x_t + d u_t) w^x_t
///   y_{t+1} = a_bar y_t + c_bar y_t w^y_t
///
/// with unit-variance white noises of correlation rho, an m-dimensional
/// control u, exploration temperature lambda, and terminal cost
/// (x_T, y_T)' q_terminal (x_T, y_T).
struct ModelParams {
    double a = 1.0;
    std::vector<double> b{0.0};  // 1xm control drift row
    double c = 0.0;
    std::vector<double> d{0.0};  // 1xm control diffusion row
    double a_bar = 1.0;
    double c_bar = 0.0;
    double rho = 0.0;
    double lambda = 0.1;
    Matrix q_terminal = Matrix::sym2(1.0, -1.0, 1.0);

    int control_dim() const { return static_cast<int>(b.size()); }

    void validate() const {
        if (b.size() != d.size() || b.empty())
            throw std::invalid_argument("control drift/diffusion rows must share a positive length");
        if (!(std::abs(rho) <= 1.0)) throw std::invalid_argument("|rho| must be <= 1");
        if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
        if (q_terminal.rows() != 2 || q_terminal.cols() != 2 || !q_terminal.is_symmetric())
            throw std::invalid_argument("terminal weight must be a symmetric 2x2 matrix");
        bool any = false;
        for (std::size_t i = 0; i < b.size(); ++i) any = any || b[i] != 0.0 || d[i] != 0.0;
        if (!any) throw std::invalid_argument("control drift and diffusion cannot both vanish");
    }

    /// Convenience for the scalar-control (m = 1) specializations.
    double b1() const { return b.at(0); }
    double d1() const { return d.at(0); }
    bool scalar_control() const { return b.size() == 1; }
};

struct StateVec {
    double x = 0.0;
    double y = 0.0;
};

}  // namespace explq
