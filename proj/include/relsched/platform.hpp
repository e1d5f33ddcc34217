#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <relsched/rng.hpp>

namespace relsched {

/// One DVFS-capable processor. Frequencies are normalized so that the
/// maximum frequency is exactly 1; `f_min` is the lowest sustainable
/// frequency. Transient faults arrive as a Poisson process whose rate grows
/// exponentially as the frequency is scaled down.
struct Processor {
    std::size_t id = 0;
    double f_min = 0.3;    // lowest normalized frequency, in (0, 1)
    double p_static = 0.5; // frequency-independent power
    double c = 1.0;        // switching constant of the dynamic power term
    double alpha = 3.0;    // dynamic power exponent, > 1
    double lambda0 = 1e-6; // faults per time unit at maximum frequency
    double d = 2.0;        // sensitivity of the fault rate to scaling
};

inline void validate(const Processor& p) {
    if (!(p.f_min > 0.0 && p.f_min < 1.0))
        throw std::invalid_argument("processor " + std::to_string(p.id) +
                                    ": f_min must lie in (0, 1)");
    if (!(p.p_static > 0.0 && p.c > 0.0 && p.lambda0 > 0.0 && p.d > 0.0))
        throw std::invalid_argument("processor " + std::to_string(p.id) +
                                    ": power/fault constants must be positive");
    if (!(p.alpha > 1.0))
        throw std::invalid_argument("processor " + std::to_string(p.id) +
                                    ": alpha must exceed 1");
}

/// A fully connected set of heterogeneous processors plus the granularity of
/// the discrete frequency grid used by frequency allocation.
struct Platform {
    std::vector<Processor> processors;
    double frequency_step = 0.0001;

    std::size_t size() const { return processors.size(); }
    const Processor& proc(std::size_t k) const { return processors[k]; }

    /// Index of the highest grid frequency (frequency 1.0).
    long grid_top() const { return std::lround(1.0 / frequency_step); }

    /// Smallest grid index whose frequency is >= f_min of processor k.
    long grid_bottom(std::size_t k) const {
        const double f_min = processors[k].f_min;
        long lo = static_cast<long>(std::ceil(f_min / frequency_step - 1e-9));
        if (lo < 1) lo = 1;
        return lo;
    }

    double grid_frequency(long index) const { return index * frequency_step; }

    /// Nearest grid index for a frequency, clamped into [grid_bottom, grid_top].
    long grid_snap(std::size_t k, double f) const {
        long idx = std::lround(f / frequency_step);
        const long lo = grid_bottom(k);
        const long hi = grid_top();
        if (idx < lo) idx = lo;
        if (idx > hi) idx = hi;
        return idx;
    }
};

inline void validate(const Platform& pf) {
    if (pf.processors.empty())
        throw std::invalid_argument("platform must contain at least one processor");
    if (!(pf.frequency_step > 0.0))
        throw std::invalid_argument("frequency_step must be positive");
    for (const auto& p : pf.processors) {
        validate(p);
    }
    for (std::size_t k = 0; k < pf.size(); ++k) {
        if (pf.grid_bottom(k) > pf.grid_top())
            throw std::invalid_argument("frequency_step leaves processor " +
                                        std::to_string(k) + " with an empty grid");
    }
}

inline void check_frequency(const Processor& p, double f) {
    if (!(f >= p.f_min && f <= 1.0))
        throw std::invalid_argument("frequency " + std::to_string(f) +
                                    " outside [" + std::to_string(p.f_min) +
                                    ", 1] of processor " + std::to_string(p.id));
}

/// Total power drawn at frequency f: static part plus c * f^alpha.
inline double power(const Processor& p, double f) {
    check_frequency(p, f);
    return p.p_static + p.c * std::pow(f, p.alpha);
}

/// Energy of running for `wcet` time units (measured at full frequency) at
/// frequency f; the execution stretches to wcet / f.
inline double energy(const Processor& p, double wcet, double f) {
    if (wcet < 0.0) throw std::invalid_argument("negative execution time");
    if (wcet == 0.0) return 0.0;
    return power(p, f) * (wcet / f);
}

/// Transient fault rate at frequency f: lambda0 * 10^(d * (1-f) / (1-f_min)).
inline double fault_rate(const Processor& p, double f) {
    check_frequency(p, f);
    static const double ln10 = std::log(10.0);
    return p.lambda0 * std::exp(ln10 * (p.d * (1.0 - f) / (1.0 - p.f_min)));
}

/// ln of the success probability of one execution: -lambda(f) * wcet / f.
/// Kept in log space because values sit extremely close to one.
inline double ln_reliability(const Processor& p, double wcet, double f) {
    if (wcet < 0.0) throw std::invalid_argument("negative execution time");
    if (wcet == 0.0) return 0.0;
    return -fault_rate(p, f) * (wcet / f);
}

inline double reliability(const Processor& p, double wcet, double f) {
    return std::exp(ln_reliability(p, wcet, f));
}

/// Uniform sampling ranges for random platforms.
struct ParameterRanges {
    double p_static_min = 0.4, p_static_max = 0.8;
    double c_min = 0.8, c_max = 1.3;
    double f_min_lo = 0.3, f_min_hi = 1.0;
    double alpha_min = 2.7, alpha_max = 3.0;
    double lambda0_min = 1e-6, lambda0_max = 1e-5;
    double d_min = 1.0, d_max = 3.0;
};

inline void validate(const ParameterRanges& r) {
    auto ordered = [](double lo, double hi) { return lo <= hi && lo > 0.0; };
    if (!ordered(r.p_static_min, r.p_static_max) || !ordered(r.c_min, r.c_max) ||
        !ordered(r.f_min_lo, r.f_min_hi) || !ordered(r.alpha_min, r.alpha_max) ||
        !ordered(r.lambda0_min, r.lambda0_max) || !ordered(r.d_min, r.d_max))
        throw std::invalid_argument("parameter ranges must be positive and ordered");
    if (r.f_min_hi > 1.0)
        throw std::invalid_argument("f_min range must stay within (0, 1]");
    if (r.alpha_min <= 1.0)
        throw std::invalid_argument("alpha range must stay above 1");
}

inline Platform random_platform(std::size_t m, const ParameterRanges& ranges,
                                std::uint64_t seed, double frequency_step = 0.0001) {
    if (m == 0) throw std::invalid_argument("platform needs at least one processor");
    validate(ranges);
    auto eng = make_engine(seed);
    auto uni = [&eng](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(eng);
    };
    Platform pf;
    pf.frequency_step = frequency_step;
    pf.processors.reserve(m);
    for (std::size_t k = 0; k < m; ++k) {
        Processor p;
        p.id = k;
        p.p_static = uni(ranges.p_static_min, ranges.p_static_max);
        p.c = uni(ranges.c_min, ranges.c_max);
        // An f_min of 1 would leave no frequency range at all.
        p.f_min = std::min(uni(ranges.f_min_lo, ranges.f_min_hi), 0.9999);
        p.alpha = uni(ranges.alpha_min, ranges.alpha_max);
        p.lambda0 = uni(ranges.lambda0_min, ranges.lambda0_max);
        p.d = uni(ranges.d_min, ranges.d_max);
        pf.processors.push_back(p);
    }
    validate(pf);
    return pf;
}

} // namespace relsched
