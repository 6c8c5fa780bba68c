#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "recur/error.hpp"
#include "recur/metrics.hpp"
#include "recur/rng.hpp"

namespace recur {

// ---------------------------------------------------------------------------
// Discrete processes

inline std::vector<double> gen_white_noise(std::size_t len, Rng& rng) {
    std::vector<double> out(len);
    for (double& v : out) v = rng.normal();
    return out;
}

struct ArmaParams {
    std::vector<double> phi;  // autoregressive coefficients phi_1..phi_p
    double theta = 0.0;       // MA(1) coefficient
};

/// True when all roots of 1 - phi_1 z - ... - phi_p z^p lie outside the unit
/// circle (companion matrix spectral radius below one).
inline bool is_stationary(std::span<const double> phi) {
    const auto p = static_cast<Eigen::Index>(phi.size());
    if (p == 0) return true;
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < p; ++i) companion(0, i) = phi[static_cast<std::size_t>(i)];
    for (Eigen::Index i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
    const Eigen::VectorXcd eig = companion.eigenvalues();
    return eig.cwiseAbs().maxCoeff() < 1.0;
}

inline constexpr std::size_t kArmaBurnIn = 500;

/// X_t = sum_i phi_i X_{t-i} + e_t + theta e_{t-1}, started at zero and
/// run for kArmaBurnIn discarded steps.
inline std::vector<double> gen_ar_arma(std::size_t len, const ArmaParams& params, Rng& rng) {
    for (double c : params.phi) {
        if (!std::isfinite(c)) throw InvalidInput("non-finite AR coefficient");
    }
    if (!std::isfinite(params.theta)) throw InvalidInput("non-finite MA coefficient");
    if (!is_stationary(params.phi)) throw InvalidInput("AR coefficients are not stationary");
    const std::size_t p = params.phi.size();
    const std::size_t total = kArmaBurnIn + len;
    std::vector<double> x(total, 0.0);
    double prev_noise = 0.0;
    for (std::size_t t = 0; t < total; ++t) {
        const double e = rng.normal();
        double v = e + params.theta * prev_noise;
        for (std::size_t i = 1; i <= p && i <= t; ++i) v += params.phi[i - 1] * x[t - i];
        x[t] = v;
        prev_noise = e;
    }
    return {x.begin() + static_cast<std::ptrdiff_t>(kArmaBurnIn), x.end()};
}

// ---------------------------------------------------------------------------
// Fractional Brownian motion

/// Exact fBm sampler on the grid dt, 2 dt, ..., points * dt via the Cholesky
/// factor of Cov(B_t, B_s) = (t^2H + s^2H - |t - s|^2H) / 2. Factors are
/// cached per (points, H, dt) and shared between threads.
class FbmSampler {
public:
    FbmSampler(std::size_t points, double hurst, double dt) : points_(points) {
        if (!(hurst > 0.0 && hurst < 1.0)) throw InvalidInput("Hurst exponent must lie in (0, 1)");
        if (!(dt > 0.0)) throw InvalidInput("time step must be positive");
        factor_ = cached_factor(points, hurst, dt);
    }

    [[nodiscard]] std::size_t points() const noexcept { return points_; }

    /// Values at dt, 2 dt, ..., points * dt (the origin value 0 is omitted).
    [[nodiscard]] std::vector<double> draw(Rng& rng) const {
        Eigen::VectorXd z(static_cast<Eigen::Index>(points_));
        for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
        const Eigen::VectorXd path = factor_->triangularView<Eigen::Lower>() * z;
        return {path.data(), path.data() + path.size()};
    }

    [[nodiscard]] static double covariance(double t, double s, double hurst) noexcept {
        const double h2 = 2.0 * hurst;
        return 0.5 * (std::pow(t, h2) + std::pow(s, h2) - std::pow(std::abs(t - s), h2));
    }

private:
    using Key = std::tuple<std::size_t, double, double>;

    static std::shared_ptr<const Eigen::MatrixXd> cached_factor(std::size_t points, double hurst, double dt) {
        static std::mutex mutex;
        static std::map<Key, std::shared_ptr<const Eigen::MatrixXd>> cache;
        const Key key{points, hurst, dt};
        {
            std::lock_guard lock(mutex);
            if (auto it = cache.find(key); it != cache.end()) return it->second;
        }
        auto factor = std::make_shared<const Eigen::MatrixXd>(factorize(points, hurst, dt));
        std::lock_guard lock(mutex);
        return cache.emplace(key, std::move(factor)).first->second;
    }

    static Eigen::MatrixXd factorize(std::size_t points, double hurst, double dt) {
        const auto k = static_cast<Eigen::Index>(points);
        Eigen::MatrixXd cov(k, k);
        for (Eigen::Index i = 0; i < k; ++i)
            for (Eigen::Index j = 0; j <= i; ++j)
                cov(i, j) = cov(j, i) = covariance(static_cast<double>(i + 1) * dt, static_cast<double>(j + 1) * dt, hurst);
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success) {
            cov.diagonal().array() += 1e-12;
            llt.compute(cov);
            if (llt.info() != Eigen::Success) {
                throw InternalError("fBm covariance is not positive definite (points=" + std::to_string(points) +
                                    ", H=" + std::to_string(hurst) + ")");
            }
        }
        return llt.matrixL();
    }

    std::size_t points_;
    std::shared_ptr<const Eigen::MatrixXd> factor_;
};

/// fBm on the grid 0, 1/len, ..., (len-1)/len; the first value is 0.
inline std::vector<double> gen_fbm(std::size_t len, double hurst, Rng& rng) {
    if (len == 0) return {};
    std::vector<double> out{0.0};
    if (len == 1) return out;
    const FbmSampler sampler(len - 1, hurst, 1.0 / static_cast<double>(len));
    const auto path = sampler.draw(rng);
    out.insert(out.end(), path.begin(), path.end());
    return out;
}

// ---------------------------------------------------------------------------
// (Fractional) Ornstein-Uhlenbeck processes driven by one path

struct FouParams {
    std::size_t len = 100;
    double hurst = 0.5;
    double sigma = 1.0;
};

/// Driver path on [0, 1) and one sigma * int e^{-lambda (t-s)} dX_s process per rate.
struct OuFamily {
    std::vector<double> driver;
    std::vector<std::vector<double>> components;
};

namespace detail {

inline void check_rates(std::span<const double> lambdas) {
    if (lambdas.empty()) throw InvalidInput("at least one mean-reversion rate is required");
    for (double l : lambdas) {
        if (!(l > 0.0) || !std::isfinite(l)) throw InvalidInput("mean-reversion rates must be positive");
    }
}

inline Eigen::MatrixXd lower_cholesky(const Eigen::MatrixXd& cov, const char* what) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) throw InternalError(std::string("covariance not positive definite: ") + what);
    return llt.matrixL();
}

// Exact joint recursion for H = 1/2. Per step the vector
// (dW, eta_1, ..., eta_q), eta_a = sigma int_step e^{-l_a (t_{k+1} - s)} dW_s,
// is Gaussian with a closed-form covariance; the start values are drawn from
// the joint stationary law, which is independent of the driver on [0, 1).
inline OuFamily ou_exact(const FouParams& p, std::span<const double> lambdas, Rng& rng,
                         std::optional<std::span<const double>> driver) {
    const std::size_t q = lambdas.size();
    const double dt = 1.0 / static_cast<double>(p.len);
    const double s2 = p.sigma * p.sigma;
    const auto qi = static_cast<Eigen::Index>(q);

    Eigen::MatrixXd step(qi + 1, qi + 1);
    step(0, 0) = dt;
    for (Eigen::Index a = 0; a < qi; ++a) {
        const double la = lambdas[static_cast<std::size_t>(a)];
        step(0, a + 1) = step(a + 1, 0) = -p.sigma * std::expm1(-la * dt) / la;
        for (Eigen::Index b = 0; b < qi; ++b) {
            const double sum = la + lambdas[static_cast<std::size_t>(b)];
            step(a + 1, b + 1) = -s2 * std::expm1(-sum * dt) / sum;
        }
    }
    Eigen::MatrixXd start(qi, qi);
    for (Eigen::Index a = 0; a < qi; ++a)
        for (Eigen::Index b = 0; b < qi; ++b)
            start(a, b) = s2 / (lambdas[static_cast<std::size_t>(a)] + lambdas[static_cast<std::size_t>(b)]);
    const Eigen::MatrixXd l_step = lower_cholesky(step, "OU step");
    const Eigen::MatrixXd l_start = lower_cholesky(start, "OU stationary start");

    OuFamily out;
    out.driver.assign(p.len, 0.0);
    out.components.assign(q, std::vector<double>(p.len, 0.0));
    Eigen::VectorXd xi(qi);
    for (Eigen::Index a = 0; a < qi; ++a) xi[a] = rng.normal();
    const Eigen::VectorXd y0 = l_start * xi;
    for (std::size_t a = 0; a < q; ++a) out.components[a][0] = y0[static_cast<Eigen::Index>(a)];

    std::vector<double> decay(q);
    for (std::size_t a = 0; a < q; ++a) decay[a] = std::exp(-lambdas[a] * dt);

    Eigen::VectorXd u(qi + 1);
    for (std::size_t k = 0; k + 1 < p.len; ++k) {
        if (driver) {
            // Condition on the given increment: its standardized value is u_0.
            u[0] = ((*driver)[k + 1] - (*driver)[k]) / l_step(0, 0);
        } else {
            u[0] = rng.normal();
        }
        for (Eigen::Index a = 1; a <= qi; ++a) u[a] = rng.normal();
        const Eigen::VectorXd v = l_step * u;
        out.driver[k + 1] = out.driver[k] + v[0];
        for (std::size_t a = 0; a < q; ++a) {
            out.components[a][k + 1] = decay[a] * out.components[a][k] + v[static_cast<Eigen::Index>(a + 1)];
        }
    }
    if (driver) out.driver.assign(driver->begin(), driver->end());
    return out;
}

// H != 1/2: left-point Riemann-Stieltjes sums against an fBm path on
// [-10 / min(lambda), 1), started from zero at the left end; the window
// before 0 is discarded and the driver is re-based to start at 0.
inline OuFamily fou_riemann(const FouParams& p, std::span<const double> lambdas, Rng& rng) {
    const double dt = 1.0 / static_cast<double>(p.len);
    const double min_rate = *std::min_element(lambdas.begin(), lambdas.end());
    const auto burn = static_cast<std::size_t>(std::ceil(10.0 / min_rate / dt));
    const std::size_t total = burn + p.len;

    const FbmSampler sampler(total - 1, p.hurst, dt);
    std::vector<double> path{0.0};
    const auto tail = sampler.draw(rng);
    path.insert(path.end(), tail.begin(), tail.end());

    OuFamily out;
    out.driver.resize(p.len);
    for (std::size_t k = 0; k < p.len; ++k) out.driver[k] = path[burn + k] - path[burn];
    out.components.assign(lambdas.size(), std::vector<double>(p.len, 0.0));
    for (std::size_t a = 0; a < lambdas.size(); ++a) {
        const double decay = std::exp(-lambdas[a] * dt);
        double y = 0.0;
        for (std::size_t k = 0; k < total; ++k) {
            if (k >= burn) out.components[a][k - burn] = y;
            if (k + 1 < total) y = decay * (y + p.sigma * (path[k + 1] - path[k]));
        }
    }
    return out;
}

}  // namespace detail

/// Jointly generated (F)OU processes, one per rate, sharing a single driver.
/// A driver may be supplied only for H = 1/2 (its increments are then
/// conditioned on exactly).
inline OuFamily gen_ou_family(const FouParams& p, std::span<const double> lambdas, Rng& rng,
                              std::optional<std::span<const double>> driver = std::nullopt) {
    detail::check_rates(lambdas);
    if (p.len < 1) throw InvalidInput("series length must be positive");
    if (!(p.hurst > 0.0 && p.hurst < 1.0)) throw InvalidInput("Hurst exponent must lie in (0, 1)");
    if (!(p.sigma > 0.0)) throw InvalidInput("sigma must be positive");
    if (driver && driver->size() != p.len) throw InvalidInput("driver length does not match len");
    if (p.hurst == 0.5) return detail::ou_exact(p, lambdas, rng, driver);
    if (driver) throw InvalidInput("an external driver is only supported for H = 0.5");
    return detail::fou_riemann(p, lambdas, rng);
}

/// (driver X, FOU(lambda) Y).
inline std::pair<std::vector<double>, std::vector<double>> gen_fou(
    const FouParams& p, double lambda, Rng& rng, std::optional<std::span<const double>> driver = std::nullopt) {
    const double rates[] = {lambda};
    auto fam = gen_ou_family(p, rates, rng, driver);
    return {std::move(fam.driver), std::move(fam.components[0])};
}

/// Weights l1 / (l1 - l2) and l2 / (l2 - l1) of the two-rate combination.
inline std::pair<double, double> fou2_weights(double lambda1, double lambda2) {
    if (lambda1 == lambda2) throw InvalidInput("FOU(2) requires distinct rates");
    return {lambda1 / (lambda1 - lambda2), lambda2 / (lambda2 - lambda1)};
}

/// (driver X, FOU(2) Y) with both components driven by the same path.
inline std::pair<std::vector<double>, std::vector<double>> gen_fou2(
    const FouParams& p, double lambda1, double lambda2, Rng& rng,
    std::optional<std::span<const double>> driver = std::nullopt) {
    const auto [w1, w2] = fou2_weights(lambda1, lambda2);
    const double rates[] = {lambda1, lambda2};
    auto fam = gen_ou_family(p, rates, rng, driver);
    std::vector<double> y(p.len);
    for (std::size_t k = 0; k < p.len; ++k) y[k] = w1 * fam.components[0][k] + w2 * fam.components[1][k];
    return {std::move(fam.driver), std::move(y)};
}

// ---------------------------------------------------------------------------
// Scenarios

enum class ScenarioId { Null, D1, D2, D3, C1, C2, C3, C4, C5, C6, C7, XouYou, XfouYfou };

inline std::string_view to_string(ScenarioId id) noexcept {
    switch (id) {
        case ScenarioId::Null: return "null";
        case ScenarioId::D1: return "D1";
        case ScenarioId::D2: return "D2";
        case ScenarioId::D3: return "D3";
        case ScenarioId::C1: return "C1";
        case ScenarioId::C2: return "C2";
        case ScenarioId::C3: return "C3";
        case ScenarioId::C4: return "C4";
        case ScenarioId::C5: return "C5";
        case ScenarioId::C6: return "C6";
        case ScenarioId::C7: return "C7";
        case ScenarioId::XouYou: return "X-OU-Y-OU";
        case ScenarioId::XfouYfou: return "X-FOU-Y-FOU";
    }
    return "?";
}

inline ScenarioId parse_scenario(std::string_view name) {
    for (int i = 0; i <= static_cast<int>(ScenarioId::XfouYfou); ++i) {
        const auto id = static_cast<ScenarioId>(i);
        if (name == to_string(id)) return id;
    }
    throw InvalidInput("unknown scenario '" + std::string(name) + "'");
}

/// Generation parameters of one paired-sample scenario.
///
/// Discrete scenarios (null, D1-D3) draw X from the ARMA(phi, theta) process
/// (white noise when phi is empty and theta is 0). Continuous scenarios draw
/// X from fBm on [0, 1) with Hurst exponent `hurst`, defaulting to 0.7 for
/// C5, C7 and X-FOU-Y-FOU and to 0.5 otherwise.
struct ScenarioConfig {
    ScenarioId id = ScenarioId::Null;
    std::size_t n = 30;
    std::size_t len = 100;
    std::vector<double> phi;
    double theta = 0.0;
    std::optional<double> hurst;
    std::optional<double> lambda;
    std::optional<double> lambda1;
    std::optional<double> lambda2;
    double sigma = 1.0;
    std::uint64_t seed = 0;

    [[nodiscard]] double effective_hurst() const {
        if (hurst) return *hurst;
        return (id == ScenarioId::C5 || id == ScenarioId::C7 || id == ScenarioId::XfouYfou) ? 0.7 : 0.5;
    }
};

namespace detail {

inline double require(const std::optional<double>& v, const char* name, ScenarioId id) {
    if (!v) throw InvalidInput(std::string("scenario ") + std::string(to_string(id)) + " requires " + name);
    return *v;
}

inline Sample rows_to_sample(const std::vector<std::vector<double>>& rows) { return Sample::from_rows(rows); }

}  // namespace detail

/// Validates cfg without generating anything.
inline void validate(const ScenarioConfig& cfg) {
    if (cfg.n < 2) throw InvalidInput("scenario needs n >= 2");
    if (cfg.len < 1) throw InvalidInput("scenario needs len >= 1");
    if (!(cfg.sigma > 0.0)) throw InvalidInput("sigma must be positive");
    const double h = cfg.effective_hurst();
    if (!(h > 0.0 && h < 1.0)) throw InvalidInput("Hurst exponent must lie in (0, 1)");
    switch (cfg.id) {
        case ScenarioId::Null:
        case ScenarioId::D1:
        case ScenarioId::D2:
        case ScenarioId::D3:
            if (!is_stationary(cfg.phi)) throw InvalidInput("AR coefficients are not stationary");
            break;
        case ScenarioId::C4:
        case ScenarioId::C5:
            if (!(detail::require(cfg.lambda, "lambda", cfg.id) > 0.0)) throw InvalidInput("lambda must be positive");
            break;
        case ScenarioId::C6:
        case ScenarioId::C7:
        case ScenarioId::XouYou:
        case ScenarioId::XfouYfou: {
            const double l1 = detail::require(cfg.lambda1, "lambda1", cfg.id);
            const double l2 = detail::require(cfg.lambda2, "lambda2", cfg.id);
            if (!(l1 > 0.0 && l2 > 0.0)) throw InvalidInput("lambda1 and lambda2 must be positive");
            if (l1 == l2) throw InvalidInput("lambda1 and lambda2 must differ");
            break;
        }
        default: break;
    }
}

/// n paired rows (X_i, Y_i), each a series of length len. Row i uses only
/// the stream (cfg.seed, Simulation, i); the D2 noise scale is the pooled
/// standard deviation of sqrt|X| over the whole batch.
inline std::pair<Sample, Sample> gen_scenario(const ScenarioConfig& cfg) {
    validate(cfg);
    const std::size_t n = cfg.n;
    const std::size_t len = cfg.len;
    const ArmaParams arma{cfg.phi, cfg.theta};
    const FouParams fou{len, cfg.effective_hurst(), cfg.sigma};
    std::vector<std::vector<double>> xs(n), ys(n), noise(n);

    for (std::size_t i = 0; i < n; ++i) {
        auto rng = Rng::stream(cfg.seed, StreamTask::Simulation, i);
        auto& x = xs[i];
        auto& y = ys[i];
        switch (cfg.id) {
            case ScenarioId::Null:
                x = gen_ar_arma(len, arma, rng);
                y = gen_ar_arma(len, arma, rng);
                break;
            case ScenarioId::D1:
            case ScenarioId::D2:
            case ScenarioId::D3: {
                x = gen_ar_arma(len, arma, rng);
                const auto e = gen_white_noise(len, rng);
                y.resize(len);
                for (std::size_t t = 0; t < len; ++t) {
                    if (cfg.id == ScenarioId::D1) y[t] = x[t] * x[t] + 3.0 * e[t];
                    else if (cfg.id == ScenarioId::D2) y[t] = std::sqrt(std::abs(x[t]));
                    else y[t] = e[t] * x[t];
                }
                if (cfg.id == ScenarioId::D2) noise[i] = e;
                break;
            }
            case ScenarioId::C1:
            case ScenarioId::C2:
            case ScenarioId::C3: {
                x = gen_fbm(len, fou.hurst, rng);
                const auto e = gen_white_noise(len, rng);
                const auto e2 = gen_white_noise(len, rng);
                y.resize(len);
                for (std::size_t t = 0; t < len; ++t) {
                    if (cfg.id == ScenarioId::C1) y[t] = x[t] * x[t] + 3.0 * e[t];
                    else if (cfg.id == ScenarioId::C2) y[t] = std::sqrt(std::abs(x[t])) + cfg.sigma * e[t];
                    else y[t] = e[t] * x[t] + 3.0 * e2[t];
                }
                break;
            }
            case ScenarioId::C4:
            case ScenarioId::C5: {
                auto [drv, out] = gen_fou(fou, *cfg.lambda, rng);
                x = std::move(drv);
                y = std::move(out);
                break;
            }
            case ScenarioId::C6:
            case ScenarioId::C7: {
                auto [drv, out] = gen_fou2(fou, *cfg.lambda1, *cfg.lambda2, rng);
                x = std::move(drv);
                y = std::move(out);
                break;
            }
            case ScenarioId::XouYou:
            case ScenarioId::XfouYfou: {
                const double rates[] = {*cfg.lambda1, *cfg.lambda2};
                auto fam = gen_ou_family(fou, rates, rng);
                x = std::move(fam.components[0]);
                y = std::move(fam.components[1]);
                break;
            }
        }
    }

    if (cfg.id == ScenarioId::D2) {
        double sum = 0.0, sum_sq = 0.0;
        for (const auto& y : ys)
            for (double v : y) {
                sum += v;
                sum_sq += v * v;
            }
        const auto count = static_cast<double>(n * len);
        const double mean = sum / count;
        const double sd = std::sqrt(std::max(0.0, sum_sq / count - mean * mean));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t t = 0; t < len; ++t) ys[i][t] += sd * noise[i][t];
    }
    return {detail::rows_to_sample(xs), detail::rows_to_sample(ys)};
}

}  // namespace recur
