#pragma once

#include <stdexcept>
#include <string>

namespace explq {

/// Control-effect matrix G_t failed to be symmetric positive definite at
/// some period; the Gaussian policy is not normalizable there.
class SingularGainError : public std::runtime_error {
public:
    SingularGainError(int period, const std::string& detail)
        : std::runtime_error("singular gain at period t=" + std::to_string(period) +
                             (detail.empty() ? "" : ": " + detail)),
          period_(period) {}

    int period() const noexcept { return period_; }

private:
    int period_;
};

/// D = 0 makes the liability-gain power base undefined in the closed form.
class DegenerateDiffusionError : public std::runtime_error {
public:
    explicit DegenerateDiffusionError(const std::string& what)
        : std::runtime_error(what) {}
};

/// Bad configuration (file syntax, unknown key, invariant violation).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Training step rejected more than the allowed number of times in a row.
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace explq
