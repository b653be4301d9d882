// Bayesian-optimization tuner: scrambled-Halton initial design, GP surrogate
// refit each round, expected-improvement proposals over quasi-random
// candidates with local refinement, and a resumable evaluation history.
// Evaluations are expensive closures (full RL trainings), each run with a
// derived, logged seed.
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "proxops/ddpg.hpp"
#include "proxops/errors.hpp"
#include "proxops/gp.hpp"
#include "proxops/linalg.hpp"
#include "proxops/rng.hpp"

namespace proxops {

struct SearchDimension {
    std::string name;
    double lower = 0.0;
    double upper = 1.0;
    enum class Scale { Linear, Log };
    Scale scale = Scale::Linear;
    enum class Kind { Continuous, Integer };
    Kind kind = Kind::Continuous;
};

struct SearchSpace {
    std::vector<SearchDimension> dims;

    void validate() const {
        for (const auto& d : dims) {
            if (!(d.lower < d.upper))
                throw InvalidArgument("SearchSpace: lower < upper required for " + d.name);
            if (d.scale == SearchDimension::Scale::Log && d.lower <= 0.0)
                throw InvalidArgument("SearchSpace: log scale needs lower > 0 for " + d.name);
        }
    }

    std::size_t size() const { return dims.size(); }

    double decode_dim(std::size_t k, double u) const {
        const auto& d = dims[k];
        double v;
        if (d.scale == SearchDimension::Scale::Log)
            v = std::exp(std::log(d.lower) + u * (std::log(d.upper) - std::log(d.lower)));
        else
            v = d.lower + u * (d.upper - d.lower);
        if (d.kind == SearchDimension::Kind::Integer) v = std::round(v);
        return std::clamp(v, d.lower, d.upper);
    }

    std::vector<double> decode(const VecX& u) const {
        std::vector<double> v(dims.size());
        for (std::size_t k = 0; k < dims.size(); ++k) v[k] = decode_dim(k, u(static_cast<long>(k)));
        return v;
    }
};

namespace detail {

inline double halton(std::uint64_t index, unsigned base) {
    double f = 1.0, r = 0.0;
    while (index > 0) {
        f /= base;
        r += f * (index % base);
        index /= base;
    }
    return r;
}

inline unsigned nth_prime(std::size_t n) {
    static const unsigned primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                                      31, 37, 41, 43, 47, 53, 59, 61, 67, 71};
    if (n >= sizeof(primes) / sizeof(primes[0]))
        throw InvalidArgument("SearchSpace: too many dimensions");
    return primes[n];
}

// Cranley-Patterson rotated Halton point in the unit cube.
inline VecX scrambled_halton(std::uint64_t index, const VecX& shifts) {
    VecX u(shifts.size());
    for (long d = 0; d < shifts.size(); ++d) {
        double x = halton(index + 1, nth_prime(static_cast<std::size_t>(d))) +
                   shifts(d);
        u(d) = x - std::floor(x);
    }
    return u;
}

}  // namespace detail

// EI-maximizing candidate in the unit cube: 4096 quasi-random candidates,
// local pattern refinement from the top 8, integer rounding after
// optimization, and a perturbation step so an already-evaluated point is
// never returned.
inline VecX propose_next(const GpSurrogate& surrogate, const SearchSpace& space,
                         Rng& rng, double best_so_far) {
    const long d = static_cast<long>(space.size());
    VecX shifts(d);
    for (long k = 0; k < d; ++k) shifts(k) = rng.uniform01();

    auto ei_at = [&](const VecX& u) {
        const auto p = surrogate.predict(u);
        return expected_improvement(p.mean, p.variance, best_so_far);
    };

    const int n_cand = 4096;
    std::vector<std::pair<double, VecX>> scored;
    scored.reserve(n_cand);
    for (int i = 0; i < n_cand; ++i) {
        VecX u = detail::scrambled_halton(static_cast<std::uint64_t>(i), shifts);
        scored.emplace_back(ei_at(u), u);
    }
    std::partial_sort(scored.begin(), scored.begin() + 8, scored.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });

    double best_ei = -1.0;
    VecX best_u = scored.front().second;
    for (int t = 0; t < 8; ++t) {
        VecX u = scored[static_cast<std::size_t>(t)].second;
        double val = scored[static_cast<std::size_t>(t)].first;
        double step = 0.05;
        for (int round = 0; round < 20; ++round) {
            bool improved = false;
            for (long k = 0; k < d; ++k) {
                for (double dir : {+1.0, -1.0}) {
                    VecX u2 = u;
                    u2(k) = std::clamp(u2(k) + dir * step, 0.0, 1.0);
                    const double v2 = ei_at(u2);
                    if (v2 > val) {
                        val = v2;
                        u = u2;
                        improved = true;
                    }
                }
            }
            if (!improved) step *= 0.5;
        }
        if (val > best_ei) {
            best_ei = val;
            best_u = u;
        }
    }

    // Snap integer dimensions, then make sure the point is new.
    auto snap = [&](VecX u) {
        for (long k = 0; k < d; ++k) {
            const auto& dim = space.dims[static_cast<std::size_t>(k)];
            if (dim.kind == SearchDimension::Kind::Integer) {
                const double v = space.decode_dim(static_cast<std::size_t>(k), u(k));
                // Re-encode the rounded value.
                double t;
                if (dim.scale == SearchDimension::Scale::Log)
                    t = (std::log(v) - std::log(dim.lower)) /
                        (std::log(dim.upper) - std::log(dim.lower));
                else
                    t = (v - dim.lower) / (dim.upper - dim.lower);
                u(k) = std::clamp(t, 0.0, 1.0);
            }
        }
        return u;
    };
    best_u = snap(best_u);
    for (int guard = 0; guard < 64; ++guard) {
        bool collision = false;
        for (long i = 0; i < surrogate.X().rows(); ++i)
            if ((surrogate.X().row(i).transpose() - best_u).norm() < 1e-9) {
                collision = true;
                break;
            }
        if (!collision) break;
        VecX u = best_u;
        for (long k = 0; k < d; ++k)
            u(k) = std::clamp(u(k) + rng.uniform(-0.05, 0.05), 0.0, 1.0);
        best_u = snap(u);
    }
    return best_u;
}

// Number of docked episodes among the final `window`.
inline double objective_final_docks(const std::vector<EpisodeMetrics>& episodes,
                                    int window = 50) {
    if (static_cast<int>(episodes.size()) < window)
        throw InvalidArgument("objective_final_docks: fewer episodes than window");
    int docks = 0;
    for (std::size_t i = episodes.size() - static_cast<std::size_t>(window);
         i < episodes.size(); ++i)
        if (episodes[i].docked) docks += 1;
    return static_cast<double>(docks);
}

// Validation-suite objective in [-attempts, 0]: -(attempts - docks).
inline double objective_validation_docks(int docks, int attempts = 5) {
    return -static_cast<double>(attempts - docks);
}

struct TuneEvaluation {
    int iteration = 0;
    std::vector<double> config;  // decoded values, dimension order
    VecX unit;                   // unit-cube encoding
    double objective = 0.0;
    bool failed = false;
    std::uint64_t seed = 0;
    double duration_s = 0.0;
};

struct TuneResult {
    std::vector<double> best_config;
    double best_objective = -std::numeric_limits<double>::infinity();
    std::vector<TuneEvaluation> history;
};

using TuneObjective =
    std::function<double(const std::vector<double>& config, std::uint64_t seed)>;
using TuneObserver = std::function<void(const TuneEvaluation&)>;

inline std::uint64_t derive_eval_seed(std::uint64_t seed, int iteration) {
    std::uint64_t z = seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(iteration + 1));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// n_init scrambled-Halton evaluations, then n_iter propose/evaluate/refit
// rounds. `resume_history` entries are consumed in order instead of
// re-evaluating, which makes an interrupted run continue exactly. A failed
// objective is recorded at the worst value observed so far and tuning
// continues.
inline TuneResult tune(const TuneObjective& objective, const SearchSpace& space,
                       int n_init, int n_iter, std::uint64_t seed,
                       const TuneObserver& observer = {},
                       const std::vector<TuneEvaluation>& resume_history = {},
                       const std::vector<VecX>& seed_points = {}) {
    if (n_init < 2) throw InvalidArgument("tune: n_init >= 2");
    if (n_iter < 0) throw InvalidArgument("tune: n_iter >= 0");
    space.validate();
    const long d = static_cast<long>(space.size());

    Rng rng(seed);
    VecX init_shifts(d);
    for (long k = 0; k < d; ++k) init_shifts(k) = rng.uniform01();

    TuneResult result;
    MatX X(0, d);
    VecX y(0);

    auto record = [&](TuneEvaluation ev) {
        X.conservativeResize(X.rows() + 1, d);
        X.row(X.rows() - 1) = ev.unit.transpose();
        y.conservativeResize(y.size() + 1);
        y(y.size() - 1) = ev.objective;
        if (ev.objective > result.best_objective && !ev.failed) {
            result.best_objective = ev.objective;
            result.best_config = ev.config;
        }
        if (observer) observer(ev);
        result.history.push_back(std::move(ev));
    };

    const int total = n_init + n_iter;
    for (int iter = 0; iter < total; ++iter) {
        VecX u;
        if (iter < static_cast<int>(seed_points.size())) {
            u = seed_points[static_cast<std::size_t>(iter)];
        } else if (iter < n_init) {
            u = detail::scrambled_halton(static_cast<std::uint64_t>(iter), init_shifts);
        } else {
            GpSurrogate surrogate = gp_fit_mll(X, y, rng);
            u = propose_next(surrogate, space, rng,
                             result.best_objective >
                                     -std::numeric_limits<double>::infinity()
                                 ? result.best_objective
                                 : y.maxCoeff());
        }

        if (iter < static_cast<int>(resume_history.size())) {
            TuneEvaluation ev = resume_history[static_cast<std::size_t>(iter)];
            ev.iteration = iter;
            record(std::move(ev));
            continue;
        }

        TuneEvaluation ev;
        ev.iteration = iter;
        ev.unit = u;
        ev.config = space.decode(u);
        ev.seed = derive_eval_seed(seed, iter);
        const auto t0 = std::chrono::steady_clock::now();
        try {
            ev.objective = objective(ev.config, ev.seed);
        } catch (const std::exception&) {
            ev.failed = true;
            ev.objective = (y.size() > 0) ? y.minCoeff() : 0.0;
        }
        ev.duration_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        record(std::move(ev));
    }
    return result;
}

}  // namespace proxops
