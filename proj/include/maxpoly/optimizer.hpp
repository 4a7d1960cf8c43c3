#ifndef MAXPOLY_OPTIMIZER_HPP_
#define MAXPOLY_OPTIMIZER_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "maxpoly/error.hpp"

namespace maxpoly {

enum class OptimizerKind { owlqn, proximal_gradient };

inline std::string to_string(OptimizerKind k) { return k == OptimizerKind::owlqn ? "owlqn" : "proximal_gradient"; }

inline OptimizerKind optimizer_from_string(const std::string& s) {
    if (s == "owlqn" || s == "orthant-wise" || s == "lbfgs") return OptimizerKind::owlqn;
    if (s == "proximal_gradient" || s == "proximal") return OptimizerKind::proximal_gradient;
    throw ConfigError("unknown optimizer \"" + s + "\"");
}

// Returns f(x) and writes its gradient.
using SmoothObjective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct OptimizerOptions {
    OptimizerKind kind = OptimizerKind::owlqn;
    int max_iterations = 500;
    double tolerance = 1e-6;  // relative change of the regularized objective
    int history = 10;
};

struct OptimizationResult {
    std::vector<double> x;
    double objective = 0.0;  // f(x) + sum w |x|
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    std::vector<double> trace;  // regularized objective of every accepted iterate, starting at x0
};

namespace detail {

inline double l1_term(std::span<const double> x, std::span<const double> w) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += w[k] * std::abs(x[k]);
    return s;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

inline void pseudo_gradient(std::span<const double> x, std::span<const double> g, std::span<const double> w,
                            std::span<double> pg) {
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (x[k] > 0) {
            pg[k] = g[k] + w[k];
        } else if (x[k] < 0) {
            pg[k] = g[k] - w[k];
        } else if (g[k] + w[k] < 0) {
            pg[k] = g[k] + w[k];
        } else if (g[k] - w[k] > 0) {
            pg[k] = g[k] - w[k];
        } else {
            pg[k] = 0.0;
        }
    }
}

// Tracks the stopping rule shared by both solvers.
class Progress {
public:
    explicit Progress(double tol) : tol_(tol) {}

    // Returns true once the relative change stayed below tol twice in a row.
    bool accept(double prev, double next) {
        increases_ = next > prev ? increases_ + 1 : 0;
        if (increases_ >= 10) throw DivergenceError("objective increased for 10 consecutive accepted steps");
        double rel = std::abs(prev - next) / std::max({std::abs(prev), std::abs(next), 1.0});
        small_ = rel < tol_ ? small_ + 1 : 0;
        return small_ >= 2;
    }

private:
    double tol_;
    int small_ = 0;
    int increases_ = 0;
};

inline OptimizationResult owlqn(const SmoothObjective& fn, std::vector<double> x, std::span<const double> w,
                                const OptimizerOptions& opt) {
    const std::size_t dim = x.size();
    OptimizationResult res;
    std::vector<double> g(dim), pg(dim), d(dim), xn(dim), gn(dim), q(dim);
    double f = fn(x, g);
    ++res.evaluations;
    double F = f + l1_term(x, w);
    res.trace.push_back(F);
    std::deque<std::vector<double>> S, Y;
    std::deque<double> rho;
    Progress progress(opt.tolerance);

    for (int iter = 0; iter < opt.max_iterations; ++iter) {
        pseudo_gradient(x, g, w, pg);
        double pg_norm = std::sqrt(dot(pg, pg));
        if (pg_norm == 0.0) {
            res.converged = true;
            break;
        }

        // Two-loop recursion on the pseudo-gradient.
        q = pg;
        std::vector<double> alpha(S.size());
        for (std::size_t m = S.size(); m-- > 0;) {
            alpha[m] = rho[m] * dot(S[m], q);
            for (std::size_t k = 0; k < dim; ++k) q[k] -= alpha[m] * Y[m][k];
        }
        if (!S.empty()) {
            double gamma = dot(S.back(), Y.back()) / dot(Y.back(), Y.back());
            for (double& v : q) v *= gamma;
        }
        for (std::size_t m = 0; m < S.size(); ++m) {
            double beta = rho[m] * dot(Y[m], q);
            for (std::size_t k = 0; k < dim; ++k) q[k] += (alpha[m] - beta) * S[m][k];
        }
        bool any = false;
        for (std::size_t k = 0; k < dim; ++k) {
            d[k] = -q[k];
            if (d[k] * pg[k] >= 0) d[k] = 0.0;  // keep only descent coordinates
            any = any || d[k] != 0.0;
        }
        if (!any) {
            for (std::size_t k = 0; k < dim; ++k) d[k] = -pg[k];
            S.clear();
            Y.clear();
            rho.clear();
        }

        double step = S.empty() ? 1.0 / pg_norm : 1.0;
        double Fn = F, fn_val = f;
        bool found = false;
        for (int tries = 0; tries < 60; ++tries) {
            for (std::size_t k = 0; k < dim; ++k) {
                double orthant = x[k] != 0.0 ? (x[k] > 0 ? 1.0 : -1.0) : (pg[k] < 0 ? 1.0 : (pg[k] > 0 ? -1.0 : 0.0));
                double v = x[k] + step * d[k];
                xn[k] = v * orthant > 0 ? v : 0.0;
            }
            fn_val = fn(xn, gn);
            ++res.evaluations;
            Fn = fn_val + l1_term(xn, w);
            double decrease = 0.0;
            for (std::size_t k = 0; k < dim; ++k) decrease += pg[k] * (xn[k] - x[k]);
            if (Fn <= F + 1e-4 * decrease) {
                found = true;
                break;
            }
            step *= 0.5;
        }
        if (!found) {
            // No representable decrease along the direction: stationary to precision.
            res.converged = true;
            break;
        }

        std::vector<double> s(dim), y(dim);
        for (std::size_t k = 0; k < dim; ++k) {
            s[k] = xn[k] - x[k];
            y[k] = gn[k] - g[k];
        }
        double sy = dot(s, y);
        if (sy > 1e-12) {
            S.push_back(std::move(s));
            Y.push_back(std::move(y));
            rho.push_back(1.0 / sy);
            if (static_cast<int>(S.size()) > opt.history) {
                S.pop_front();
                Y.pop_front();
                rho.pop_front();
            }
        }
        bool done = progress.accept(F, Fn);
        x.swap(xn);
        g.swap(gn);
        f = fn_val;
        F = Fn;
        res.trace.push_back(F);
        res.iterations = iter + 1;
        if (done) {
            res.converged = true;
            break;
        }
    }
    res.x = std::move(x);
    res.objective = F;
    return res;
}

inline OptimizationResult proximal_gradient(const SmoothObjective& fn, std::vector<double> x,
                                            std::span<const double> w, const OptimizerOptions& opt) {
    const std::size_t dim = x.size();
    OptimizationResult res;
    std::vector<double> g(dim), xn(dim), gn(dim);
    double f = fn(x, g);
    ++res.evaluations;
    double F = f + l1_term(x, w);
    res.trace.push_back(F);
    double t = 1.0;
    Progress progress(opt.tolerance);

    for (int iter = 0; iter < opt.max_iterations; ++iter) {
        double fn_val = f;
        bool found = false;
        for (int tries = 0; tries < 60; ++tries) {
            double lin = 0.0, quad = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                double v = x[k] - t * g[k];
                double thr = t * w[k];
                xn[k] = v > thr ? v - thr : (v < -thr ? v + thr : 0.0);
                double dk = xn[k] - x[k];
                lin += g[k] * dk;
                quad += dk * dk;
            }
            fn_val = fn(xn, gn);
            ++res.evaluations;
            if (fn_val <= f + lin + quad / (2.0 * t) + 1e-15 * std::abs(f)) {
                found = true;
                break;
            }
            t *= 0.5;
        }
        if (!found) {
            res.converged = true;
            break;
        }
        double Fn = fn_val + l1_term(xn, w);
        bool done = progress.accept(F, Fn);
        x.swap(xn);
        g.swap(gn);
        f = fn_val;
        F = Fn;
        res.trace.push_back(F);
        res.iterations = iter + 1;
        t *= 2.0;
        if (done) {
            res.converged = true;
            break;
        }
    }
    res.x = std::move(x);
    res.objective = F;
    return res;
}

}  // namespace detail

/// Minimizes f(x) + sum_k w_k |x_k| from `x0`.
inline OptimizationResult minimize_l1(const SmoothObjective& fn, std::vector<double> x0, std::span<const double> weights,
                                      const OptimizerOptions& opt = {}) {
    if (weights.size() != x0.size()) throw ConfigError("weight vector size mismatch");
    if (opt.tolerance <= 0) throw ConfigError("tolerance must be positive");
    if (opt.max_iterations < 0) throw ConfigError("max_iterations must be non-negative");
    return opt.kind == OptimizerKind::owlqn ? detail::owlqn(fn, std::move(x0), weights, opt)
                                            : detail::proximal_gradient(fn, std::move(x0), weights, opt);
}

}  // namespace maxpoly

#endif  // MAXPOLY_OPTIMIZER_HPP_
