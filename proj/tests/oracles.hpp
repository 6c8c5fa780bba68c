#pragma once

// Independent reference computations for the statistic tests. Nothing here
// shares code with the kernels beyond the weight CDF and the data types.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "recur/metrics.hpp"
#include "recur/weights.hpp"

namespace oracle {

using recur::GaussianWeight;
using recur::PairedDistances;
using recur::ZT;

inline double normal_density(const GaussianWeight& w, double z) {
    const double u = (z - w.mu) / w.sigma;
    return std::exp(-0.5 * u * u) / (w.sigma * std::sqrt(2.0 * 3.14159265358979323846));
}

/// Midpoint grid of `cells` points over [mu - 8 sigma, mu + 8 sigma].
struct Grid {
    std::vector<double> point;
    double step = 0.0;
};

inline Grid midpoint_grid(const GaussianWeight& w, std::size_t cells) {
    Grid g;
    const double lo = w.mu - 8.0 * w.sigma;
    g.step = 16.0 * w.sigma / static_cast<double>(cells);
    g.point.resize(cells);
    for (std::size_t a = 0; a < cells; ++a) g.point[a] = lo + (static_cast<double>(a) + 0.5) * g.step;
    return g;
}

/// Integrates f(E_n(r, s)) g1(r) g2(s) with a cells x cells midpoint rule,
/// where E_n uses the strict recurrence-rate definitions. Counts on the grid
/// come from a 2-D prefix sum, so the cost is O(cells^2 + M).
template <typename F>
double quadrature(const PairedDistances& pd, const GaussianWeight& gx, const GaussianWeight& gy, std::size_t cells, F f) {
    const auto gr = midpoint_grid(gx, cells);
    const auto gs = midpoint_grid(gy, cells);
    const std::size_t m = pd.zt.size();
    // First grid index strictly above the value: the pair counts at r_a iff a >= idx.
    auto first_above = [](const std::vector<double>& pts, double v) {
        return static_cast<std::size_t>(std::upper_bound(pts.begin(), pts.end(), v) - pts.begin());
    };
    const std::size_t w = cells + 1;
    std::vector<double> joint(w * w, 0.0);
    std::vector<double> cx(w, 0.0), cy(w, 0.0);
    for (const auto& r : pd.zt) {
        const auto a = first_above(gr.point, r.z);
        const auto b = first_above(gs.point, r.t);
        joint[a * w + b] += 1.0;
        cx[a] += 1.0;
        cy[b] += 1.0;
    }
    for (std::size_t a = 0; a < w; ++a)
        for (std::size_t b = 0; b < w; ++b) {
            double v = joint[a * w + b];
            if (a > 0) v += joint[(a - 1) * w + b];
            if (b > 0) v += joint[a * w + b - 1];
            if (a > 0 && b > 0) v -= joint[(a - 1) * w + b - 1];
            joint[a * w + b] = v;
        }
    for (std::size_t a = 1; a < w; ++a) {
        cx[a] += cx[a - 1];
        cy[a] += cy[a - 1];
    }
    std::vector<double> dx(cells), dy(cells);
    for (std::size_t a = 0; a < cells; ++a) {
        dx[a] = normal_density(gx, gr.point[a]) * gr.step;
        dy[a] = normal_density(gy, gs.point[a]) * gs.step;
    }
    const auto mm = static_cast<double>(m);
    const double root_n = std::sqrt(static_cast<double>(pd.n));
    double total = 0.0;
    for (std::size_t a = 0; a < cells; ++a) {
        const double rx = cx[a] / mm;
        double row = 0.0;
        for (std::size_t b = 0; b < cells; ++b) {
            const double e = root_n * (joint[a * w + b] / mm - rx * cy[b] / mm);
            row += f(e) * dy[b];
        }
        total += row * dx[a];
    }
    return total;
}

/// Inverse of the weight CDF by Newton iteration from a bracketed start.
inline double weight_quantile(const GaussianWeight& w, double u) {
    double lo = -40.0, hi = 40.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < u) lo = mid;
        else hi = mid;
    }
    return w.mu + w.sigma * 0.5 * (lo + hi);
}

/// Midpoint rule in probability coordinates: nodes r_a = G^{-1}((a + 1/2) / cells),
/// each carrying mass 1 / cells.
template <typename F>
double quadrature_pit(const PairedDistances& pd, const GaussianWeight& gx, const GaussianWeight& gy, std::size_t cells, F f) {
    std::vector<double> rx(cells), sy(cells);
    for (std::size_t a = 0; a < cells; ++a) {
        const double u = (static_cast<double>(a) + 0.5) / static_cast<double>(cells);
        rx[a] = weight_quantile(gx, u);
        sy[a] = weight_quantile(gy, u);
    }
    const std::size_t m = pd.zt.size();
    auto first_above = [](const std::vector<double>& pts, double v) {
        return static_cast<std::size_t>(std::upper_bound(pts.begin(), pts.end(), v) - pts.begin());
    };
    const std::size_t w = cells + 1;
    std::vector<double> joint(w * w, 0.0);
    std::vector<double> cx(w, 0.0), cy(w, 0.0);
    for (const auto& r : pd.zt) {
        const auto a = first_above(rx, r.z);
        const auto b = first_above(sy, r.t);
        joint[a * w + b] += 1.0;
        cx[a] += 1.0;
        cy[b] += 1.0;
    }
    for (std::size_t a = 0; a < w; ++a)
        for (std::size_t b = 0; b < w; ++b) {
            double v = joint[a * w + b];
            if (a > 0) v += joint[(a - 1) * w + b];
            if (b > 0) v += joint[a * w + b - 1];
            if (a > 0 && b > 0) v -= joint[(a - 1) * w + b - 1];
            joint[a * w + b] = v;
        }
    for (std::size_t a = 1; a < w; ++a) {
        cx[a] += cx[a - 1];
        cy[a] += cy[a - 1];
    }
    const auto mm = static_cast<double>(m);
    const double root_n = std::sqrt(static_cast<double>(pd.n));
    double total = 0.0;
    for (std::size_t a = 0; a < cells; ++a) {
        const double px = cx[a] / mm;
        for (std::size_t b = 0; b < cells; ++b) total += f(root_n * (joint[a * w + b] / mm - px * cy[b] / mm));
    }
    const auto cc = static_cast<double>(cells);
    return total / (cc * cc);
}

inline double t2_quadrature(const PairedDistances& pd, const GaussianWeight& gx, const GaussianWeight& gy,
                            std::size_t cells = 2000) {
    return quadrature(pd, gx, gy, cells, [](double e) { return e * e; });
}

inline double t1_quadrature(const PairedDistances& pd, const GaussianWeight& gx, const GaussianWeight& gy,
                            std::size_t cells = 2000) {
    return quadrature(pd, gx, gy, cells, [](double e) { return std::abs(e); });
}

/// Thresholds below, between and above the distinct values.
inline std::vector<double> midpoints(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    std::vector<double> out{v.front() - 1.0};
    for (std::size_t k = 0; k + 1 < v.size(); ++k) out.push_back(0.5 * (v[k] + v[k + 1]));
    out.push_back(v.back() + 1.0);
    return out;
}

/// sup over the midpoint grid of |E_n(r, s)|, evaluated by direct counting.
inline double sup_grid(const PairedDistances& pd) {
    std::vector<double> zs, ts;
    for (const auto& r : pd.zt) {
        zs.push_back(r.z);
        ts.push_back(r.t);
    }
    const auto rs = midpoints(zs);
    const auto ss = midpoints(ts);
    const auto mm = static_cast<double>(pd.zt.size());
    double best = 0.0;
    for (double r : rs)
        for (double s : ss) {
            double joint = 0.0, rx = 0.0, ry = 0.0;
            for (const auto& rec : pd.zt) {
                joint += (rec.z < r && rec.t < s);
                rx += (rec.z < r);
                ry += (rec.t < s);
            }
            best = std::max(best, std::abs(joint / mm - (rx / mm) * (ry / mm)));
        }
    return std::sqrt(static_cast<double>(pd.n)) * best;
}

/// The N = 2M ordered-pair list: every record twice, (i, j) and (j, i).
inline PairedDistances ordered_pairs(const PairedDistances& pd) {
    PairedDistances out{pd.n, {}};
    for (const auto& r : pd.zt) out.zt.push_back(r);
    for (const auto& r : pd.zt) out.zt.push_back(r);
    return out;
}

/// Population mean / standard deviation, computed directly.
inline GaussianWeight moment_weight(const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    return {mean, std::sqrt(var / static_cast<double>(v.size()))};
}

inline recur::Sample gaussian_sample(std::size_t n, std::size_t d, std::mt19937_64& gen) {
    std::normal_distribution<double> normal;
    std::vector<double> v(n * d);
    for (double& x : v) x = normal(gen);
    return recur::Sample(n, d, std::move(v));
}

/// Records whose values are drawn from a small integer alphabet, so ties
/// occur within and across axes.
inline PairedDistances tied_records(std::size_t n, std::size_t m, std::mt19937_64& gen) {
    std::uniform_int_distribution<int> pick(0, 5);
    PairedDistances pd{n, {}};
    for (std::size_t k = 0; k < m; ++k) pd.zt.push_back({0.5 * pick(gen), 0.25 * pick(gen)});
    return pd;
}

inline double rel_diff(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace oracle
