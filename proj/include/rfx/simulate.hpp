#pragma once

/// @file
/// Reproducible generators for stationary space-time fields with known
/// extremal structure, plus brute-force oracles for their extremograms.
/// Every value is a pure function of (seed, site), so generation is
/// deterministic and tile-parallel.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfx/common.hpp"
#include "rfx/lattice.hpp"
#include "rfx/parallel.hpp"
#include "rfx/relevance.hpp"
#include "rfx/rng.hpp"
#include "rfx/stats.hpp"

namespace rfx {

struct WeightEntry {
    Coord offset;  // lattice offset of the innovation, one entry per axis
    double weight = 0.0;
};

struct GeneratorSpec {
    enum class Kind { iid_pareto, gaussian_iid, max_moving_maxima, m_dependent_average };

    Kind kind = Kind::iid_pareto;
    double alpha = 1.0;               // tail index for Pareto innovations
    std::vector<WeightEntry> weights; // moving window, only for moving kinds
    LatticeShape shape;
    std::uint64_t seed = 0;

    bool is_moving() const {
        return kind == Kind::max_moving_maxima || kind == Kind::m_dependent_average;
    }

    void validate() const {
        shape.validate();
        if (shape.value_dim != 1) {
            throw param_error("generator spec: shipped generators are scalar (k = 1)");
        }
        if (kind == Kind::iid_pareto || kind == Kind::m_dependent_average) {
            if (!(alpha > 0.0)) {
                throw param_error("generator spec: tail index alpha must be > 0");
            }
        }
        if (is_moving()) {
            if (weights.empty()) {
                throw param_error("generator spec: moving kinds need a weight window");
            }
            bool positive = false;
            for (const auto& w : weights) {
                if (w.offset.size() != shape.rank()) {
                    throw param_error("generator spec: weight offset rank mismatch");
                }
                if (!std::isfinite(w.weight) || w.weight < 0.0) {
                    throw param_error("generator spec: weights must be finite and >= 0");
                }
                if (w.weight > 0.0) {
                    positive = true;
                }
            }
            if (!positive) {
                throw param_error("generator spec: at least one weight must be positive");
            }
        } else if (!weights.empty()) {
            throw param_error("generator spec: iid kinds take no weight window");
        }
    }

    double weight_sum() const {
        double s = 0.0;
        for (const auto& w : weights) {
            s += w.weight;
        }
        return s;
    }

    static const char* kind_name(Kind k) {
        switch (k) {
        case Kind::iid_pareto: return "iid-pareto";
        case Kind::gaussian_iid: return "gaussian-iid";
        case Kind::max_moving_maxima: return "max-moving-maxima";
        case Kind::m_dependent_average: return "m-dependent-average";
        }
        return "?";
    }
};

namespace detail {

/// Extended innovation box that covers every window placement.
struct InnovationBox {
    std::vector<Index> lo, extent; // per axis, 1-based lattice frame

    explicit InnovationBox(const GeneratorSpec& spec) {
        const std::size_t d = spec.shape.rank();
        lo.assign(d, 1);
        extent.assign(spec.shape.dims.begin(), spec.shape.dims.end());
        if (spec.is_moving()) {
            for (std::size_t ax = 0; ax < d; ++ax) {
                Index omin = 0;
                Index omax = 0;
                for (const auto& w : spec.weights) {
                    omin = std::min(omin, w.offset[ax]);
                    omax = std::max(omax, w.offset[ax]);
                }
                lo[ax] = 1 + omin;
                extent[ax] = spec.shape.dims[ax] + omax - omin;
            }
        }
    }

    std::uint64_t counter_of(std::span<const Index> coord) const {
        std::uint64_t idx = 0;
        for (std::size_t ax = 0; ax < lo.size(); ++ax) {
            idx = idx * static_cast<std::uint64_t>(extent[ax]) +
                  static_cast<std::uint64_t>(coord[ax] - lo[ax]);
        }
        return idx;
    }
};

inline double innovation(const GeneratorSpec& spec, const CounterRng& rng,
                         std::uint64_t counter) {
    switch (spec.kind) {
    case GeneratorSpec::Kind::iid_pareto:
        return rng.pareto(counter, spec.alpha);
    case GeneratorSpec::Kind::gaussian_iid:
        return rng.normal(counter);
    case GeneratorSpec::Kind::max_moving_maxima:
        return rng.frechet(counter);
    case GeneratorSpec::Kind::m_dependent_average:
        return rng.pareto(counter, spec.alpha);
    }
    return 0.0;
}

} // namespace detail

/// Generates the field described by the spec. Deterministic given the seed;
/// stationary by construction.
inline Field generate_field(const GeneratorSpec& spec) {
    spec.validate();
    Field field(spec.shape);
    const CounterRng rng(spec.seed);
    const Index sites = spec.shape.site_count();
    auto data = field.raw();

    if (!spec.is_moving()) {
        parallel_for(static_cast<std::size_t>(sites), [&](std::size_t i) {
            data[i] = detail::innovation(spec, rng, static_cast<std::uint64_t>(i));
        });
        return field;
    }

    const detail::InnovationBox box(spec);
    const std::size_t d = spec.shape.rank();
    const bool take_max = spec.kind == GeneratorSpec::Kind::max_moving_maxima;
    parallel_for(static_cast<std::size_t>(sites), [&](std::size_t i) {
        // decode the site's 1-based coordinate
        Coord site(d);
        std::uint64_t rem = i;
        for (std::size_t ax = d; ax-- > 0;) {
            site[ax] = static_cast<Index>(rem % static_cast<std::uint64_t>(spec.shape.dims[ax])) + 1;
            rem /= static_cast<std::uint64_t>(spec.shape.dims[ax]);
        }
        Coord z(d);
        double acc = 0.0;
        bool first = true;
        for (const auto& w : spec.weights) {
            for (std::size_t ax = 0; ax < d; ++ax) {
                z[ax] = site[ax] + w.offset[ax];
            }
            const double innov = detail::innovation(spec, rng, box.counter_of(z));
            if (take_max) {
                const double v = w.weight * innov;
                acc = first ? v : std::max(acc, v);
            } else {
                acc += w.weight * innov;
            }
            first = false;
        }
        data[i] = acc;
    });
    return field;
}

// --- analytic marginal law of |X| -----------------------------------------

inline bool has_analytic_marginal(const GeneratorSpec& spec) {
    return spec.kind != GeneratorSpec::Kind::m_dependent_average;
}

/// P(|X| > x) for the stationary marginal.
inline double marginal_tail(const GeneratorSpec& spec, double x) {
    if (x <= 0.0) {
        return 1.0;
    }
    switch (spec.kind) {
    case GeneratorSpec::Kind::iid_pareto:
        return x <= 1.0 ? 1.0 : std::pow(x, -spec.alpha);
    case GeneratorSpec::Kind::gaussian_iid:
        return std::erfc(x / std::numbers::sqrt2);
    case GeneratorSpec::Kind::max_moving_maxima:
        return -std::expm1(-spec.weight_sum() / x);
    case GeneratorSpec::Kind::m_dependent_average:
        throw param_error("no analytic marginal for m-dependent-average");
    }
    return 0.0;
}

/// p-quantile of |X| for the stationary marginal.
inline double marginal_quantile(const GeneratorSpec& spec, double p) {
    if (!(p > 0.0) || !(p < 1.0)) {
        throw param_error("marginal quantile level must lie in (0,1)");
    }
    switch (spec.kind) {
    case GeneratorSpec::Kind::iid_pareto:
        return std::pow(1.0 - p, -1.0 / spec.alpha);
    case GeneratorSpec::Kind::gaussian_iid: {
        // |X| quantile: P(|X| <= x) = erf(x / sqrt(2))
        double lo = 0.0;
        double hi = 40.0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (1.0 - std::erfc(mid / std::numbers::sqrt2) < p) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return 0.5 * (lo + hi);
    }
    case GeneratorSpec::Kind::max_moving_maxima:
        return -spec.weight_sum() / std::log(p);
    case GeneratorSpec::Kind::m_dependent_average:
        throw param_error("no analytic marginal for m-dependent-average");
    }
    return 0.0;
}

/// Analytic (1 - 1/k_n)-quantile u_n when the marginal law is closed-form.
inline double analytic_u_n(const GeneratorSpec& spec, double k_n) {
    if (!(k_n > 1.0)) {
        throw param_error("quantile tuning k_n must exceed 1");
    }
    return marginal_quantile(spec, 1.0 - 1.0 / k_n);
}

/// Exact P(u_n^{-1} X in A) for exceedance-type sets; the analytic mode of
/// the exceedance-probability estimate.
inline double analytic_v_n(const GeneratorSpec& spec, const RelevanceSet& set,
                           double u_n) {
    if (set.kind == RelevanceSet::Kind::box) {
        throw param_error("analytic v_n needs an exceedance-type relevance set");
    }
    return marginal_tail(spec, set.threshold * u_n);
}

// --- joint pair sampling at a space-time lag -------------------------------

/// Draws i.i.d. pairs (X_0(0), X_{dt}(ds1, ds2, ...)) from the generator's
/// exact joint law at the given lag. Shared innovations create the
/// dependence for moving-window kinds.
class PairSampler {
public:
    PairSampler(const GeneratorSpec& spec, Coord lag, std::uint64_t seed)
        : spec_(spec), rng_(seed) {
        spec_.validate();
        if (lag.size() != spec_.shape.rank()) {
            throw param_error("pair sampler lag rank mismatch");
        }
        std::vector<WeightEntry> window = spec_.weights;
        if (!spec_.is_moving()) {
            window.push_back({Coord(spec_.shape.rank(), 0), 1.0});
        }
        // collect the union of both window placements
        std::map<Coord, std::size_t> slots;
        for (const auto& w : window) {
            slots.emplace(w.offset, 0);
            Coord shifted = w.offset;
            for (std::size_t ax = 0; ax < shifted.size(); ++ax) {
                shifted[ax] += lag[ax];
            }
            slots.emplace(shifted, 0);
        }
        std::size_t next = 0;
        for (auto& [coord, slot] : slots) {
            slot = next++;
        }
        n_slots_ = next;
        for (const auto& w : window) {
            first_terms_.push_back({slots.at(w.offset), w.weight});
            Coord shifted = w.offset;
            for (std::size_t ax = 0; ax < shifted.size(); ++ax) {
                shifted[ax] += lag[ax];
            }
            second_terms_.push_back({slots.at(shifted), w.weight});
        }
    }

    std::pair<double, double> draw(std::uint64_t pair_index) const {
        buffer_.resize(n_slots_);
        const std::uint64_t base = pair_index * n_slots_;
        for (std::size_t s = 0; s < n_slots_; ++s) {
            buffer_[s] = detail::innovation(spec_, rng_, base + s);
        }
        return {combine(first_terms_), combine(second_terms_)};
    }

private:
    struct Term {
        std::size_t slot;
        double weight;
    };

    double combine(const std::vector<Term>& terms) const {
        if (!spec_.is_moving()) {
            return buffer_[terms.front().slot];
        }
        if (spec_.kind == GeneratorSpec::Kind::max_moving_maxima) {
            double m = -std::numeric_limits<double>::infinity();
            for (const auto& t : terms) {
                m = std::max(m, t.weight * buffer_[t.slot]);
            }
            return m;
        }
        double s = 0.0;
        for (const auto& t : terms) {
            s += t.weight * buffer_[t.slot];
        }
        return s;
    }

    GeneratorSpec spec_;
    CounterRng rng_;
    std::size_t n_slots_ = 0;
    std::vector<Term> first_terms_, second_terms_;
    mutable std::vector<double> buffer_;
};

/// u_n for the oracle: analytic when available, otherwise a large-sample
/// nearest-rank quantile from marginal draws.
inline double oracle_u_n(const GeneratorSpec& spec, double k_n, std::uint64_t seed,
                         std::size_t marginal_draws = (1u << 19)) {
    if (has_analytic_marginal(spec)) {
        return analytic_u_n(spec, k_n);
    }
    PairSampler sampler(spec, Coord(spec.shape.rank(), 0), derive_seed(seed, 0x7156));
    std::vector<double> values(marginal_draws);
    parallel_for(marginal_draws, [&](std::size_t i) {
        values[i] = std::abs(sampler.draw(i).first);
    });
    return nearest_rank_quantile(std::move(values), 1.0 - 1.0 / k_n);
}

struct OracleValue {
    enum class Method { analytic, monte_carlo };
    double value = 0.0;
    double stderr_ = 0.0;
    Method method = Method::monte_carlo;
};

namespace detail {

inline bool exceedance_like(const RelevanceSet& s) {
    return s.kind == RelevanceSet::Kind::norm_exceedance ||
           s.kind == RelevanceSet::Kind::ball_complement;
}

/// Closed-form joint survival for the max-moving-maxima scheme:
/// P(X <= x, Y <= y) = exp(-sum_z max(a_z / x, a_{z-lag} / y)).
inline double moving_maxima_joint_cdf(const GeneratorSpec& spec, const Coord& lag,
                                      double x, double y) {
    std::map<Coord, std::array<double, 2>> exposure; // z -> {a for X, a for Y}
    for (const auto& w : spec.weights) {
        exposure[w.offset][0] = std::max(exposure[w.offset][0], w.weight);
        Coord shifted = w.offset;
        for (std::size_t ax = 0; ax < shifted.size(); ++ax) {
            shifted[ax] += lag[ax];
        }
        exposure[shifted][1] = std::max(exposure[shifted][1], w.weight);
    }
    double rate = 0.0;
    for (const auto& [z, a] : exposure) {
        rate += std::max(a[0] / x, a[1] / y);
    }
    return std::exp(-rate);
}

} // namespace detail

/// Pre-asymptotic iso-extremogram target
///   rho*_{A,B,n}(h_s, h_t) = P(u_n^{-1} X_{h_t}(h_s e_1) in B | u_n^{-1} X_0(0) in A)
/// at the finite quantile u_n defined by k_n. Analytic where the generator
/// and sets admit closed forms, Monte Carlo over exact joint pair draws
/// otherwise.
inline OracleValue oracle_extremogram(const GeneratorSpec& spec, const RelevanceSet& a,
                                      const RelevanceSet& b, Index h_s, Index h_t,
                                      double k_n, Index mc_pairs, std::uint64_t seed) {
    spec.validate();
    if (h_s < 0 || h_t < 0) {
        throw lag_error("oracle lags must be nonnegative");
    }
    const std::size_t d = spec.shape.rank();
    Coord lag(d, 0);
    lag[0] = h_s;
    lag[d - 1] = h_t;
    const double u_n = oracle_u_n(spec, k_n, seed);
    const bool lag_zero = h_s == 0 && h_t == 0;

    if (detail::exceedance_like(a) && detail::exceedance_like(b)) {
        const double xa = a.threshold * u_n;
        const double xb = b.threshold * u_n;
        if (spec.kind == GeneratorSpec::Kind::iid_pareto ||
            spec.kind == GeneratorSpec::Kind::gaussian_iid) {
            OracleValue out;
            out.method = OracleValue::Method::analytic;
            out.value = lag_zero
                            ? marginal_tail(spec, std::max(xa, xb)) / marginal_tail(spec, xa)
                            : marginal_tail(spec, xb);
            return out;
        }
        if (spec.kind == GeneratorSpec::Kind::max_moving_maxima) {
            const double pa = marginal_tail(spec, xa);
            const double pb = marginal_tail(spec, xb);
            const double joint_cdf = detail::moving_maxima_joint_cdf(spec, lag, xa, xb);
            const double both = 1.0 - (1.0 - pa) - (1.0 - pb) + joint_cdf;
            OracleValue out;
            out.method = OracleValue::Method::analytic;
            out.value = std::clamp(both / pa, 0.0, 1.0);
            return out;
        }
    }

    // Monte Carlo over exact joint pair draws.
    if (mc_pairs < 1) {
        throw param_error("oracle needs at least one Monte Carlo pair");
    }
    double p_a = 0.0;
    if (has_analytic_marginal(spec) && detail::exceedance_like(a)) {
        p_a = marginal_tail(spec, a.threshold * u_n);
    } else {
        // quick marginal sample to size the conditioning rate
        PairSampler probe(spec, Coord(d, 0), derive_seed(seed, 0x11aa));
        const std::size_t probes = 4096;
        std::size_t hits = 0;
        for (std::size_t i = 0; i < probes; ++i) {
            const double x = probe.draw(i).first / u_n;
            if (a.contains(std::span<const double>{&x, 1})) {
                ++hits;
            }
        }
        p_a = static_cast<double>(hits) / static_cast<double>(probes);
    }
    if (p_a > 0.0 && static_cast<double>(mc_pairs) * p_a < 100.0) {
        throw param_error("oracle: expected conditioning events below 100; "
                          "increase mc_pairs");
    }
    PairSampler sampler(spec, lag, derive_seed(seed, 0x9a17));
    std::vector<std::uint8_t> cond_flags(static_cast<std::size_t>(mc_pairs));
    std::vector<std::uint8_t> hit_flags(static_cast<std::size_t>(mc_pairs));
    parallel_for(static_cast<std::size_t>(mc_pairs), [&](std::size_t i) {
        const auto [x0, x1] = sampler.draw(i);
        const double n0 = x0 / u_n;
        const double n1 = x1 / u_n;
        const bool cond = a.contains(std::span<const double>{&n0, 1});
        cond_flags[i] = cond;
        hit_flags[i] = cond && b.contains(std::span<const double>{&n1, 1});
    });
    std::uint64_t conds = 0;
    std::uint64_t hits = 0;
    for (std::size_t i = 0; i < cond_flags.size(); ++i) {
        conds += cond_flags[i];
        hits += hit_flags[i];
    }
    if (conds == 0) {
        throw degenerate_error("oracle degenerate: no conditioning events observed");
    }
    OracleValue out;
    out.method = OracleValue::Method::monte_carlo;
    out.value = static_cast<double>(hits) / static_cast<double>(conds);
    out.stderr_ = std::sqrt(out.value * (1.0 - out.value) / static_cast<double>(conds));
    return out;
}

} // namespace rfx
