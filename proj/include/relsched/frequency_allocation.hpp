#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include <relsched/logspace.hpp>
#include <relsched/schedule.hpp>

namespace relsched {

struct FaOptions {
    double zeta = 1e-5;            // convergence window on absolute reliability
    std::size_t max_iterations = 0; // 0: 10 * processors * tasks
    bool record_trace = false;
};

struct FaTraceStep {
    TaskId task = 0;
    std::size_t processor = 0;
    double f_before = 1.0;
    double f_boundary = 1.0;
    double f_after = 1.0;
    double energy_drop = 0.0;
    double energy_total = 0.0;
    double reliability = 1.0;
};

struct FaResult {
    Schedule schedule;        // frequencies applied, times re-derived
    double ln_reliability = 0.0;
    double energy = 0.0;
    std::size_t iterations = 0;
    bool converged = false;   // reliability landed inside [r_req, r_req + zeta)
    bool early_stop = false;  // dead end: every replica pinned at its floor
                              // or constraint boundary before the window
    bool cap_hit = false;
    std::size_t safety_violations = 0; // reliability dipped below the constraint
    std::vector<FaTraceStep> trace;
};

namespace detail {

/// Mutable view of the reliability state during frequency allocation.
/// Replica reliabilities, per-task aggregates, and the total are all held as
/// natural logarithms and refreshed from scratch after each change; the
/// schedules involved are small enough that this costs nothing and it keeps
/// runs bit-reproducible.
struct FaState {
    const TaskGraph& g;
    const Platform& pf;
    std::vector<std::vector<double>> ln_repl;   // per task, per replica
    std::vector<std::vector<long>> grid_index;  // current frequency grid index
    std::vector<double> ln_task;
    double ln_total = 0.0;

    FaState(const TaskGraph& graph, const Platform& platform, const Schedule& s)
        : g(graph), pf(platform) {
        const std::size_t n = s.task_count();
        ln_repl.resize(n);
        grid_index.resize(n);
        ln_task.assign(n, 0.0);
        for (TaskId t = 0; t < n; ++t) {
            for (const Replica& r : s.replicas(t)) {
                ln_repl[t].push_back(ln_reliability(
                    pf.proc(r.processor), g.wcet(t, r.processor), r.frequency));
                grid_index[t].push_back(pf.grid_snap(r.processor, r.frequency));
            }
            refresh_task(t);
        }
        refresh_total();
    }

    void refresh_task(TaskId t) {
        double ln_all_fail = 0.0;
        for (double lr : ln_repl[t]) ln_all_fail += ln_complement(lr);
        ln_task[t] = ln_one_minus_exp(ln_all_fail);
    }

    void refresh_total() {
        ln_total = 0.0;
        for (double lt : ln_task) ln_total += lt;
    }

    /// ln of the reliability this replica must keep so that the whole
    /// schedule stays exactly at the constraint, all else fixed. Positive
    /// infinity marks "no requirement at all" (any value keeps the
    /// constraint), which happens when sibling replicas already cover it.
    double required_ln(TaskId t, std::size_t j, double ln_r_req) const {
        // Contribution of all other tasks.
        const double ln_rest = ln_total - ln_task[t];
        const double shortfall = -std::expm1(ln_r_req - ln_rest); // 1 - r_req/rest
        if (shortfall <= 0.0) {
            // The other tasks cannot carry the constraint on their own even
            // with this task perfect; the replica must not move.
            return 0.0;
        }
        double ln_sibling_fail = 0.0;
        for (std::size_t r = 0; r < ln_repl[t].size(); ++r)
            if (r != j) ln_sibling_fail += ln_complement(ln_repl[t][r]);
        if (ln_sibling_fail == neg_inf()) {
            // A sibling replica is already perfectly reliable at double
            // precision; this replica is unconstrained.
            return std::numeric_limits<double>::infinity();
        }
        const double fail_budget = shortfall / std::exp(ln_sibling_fail);
        if (fail_budget >= 1.0) return std::numeric_limits<double>::infinity();
        return std::log1p(-fail_budget);
    }
};

} // namespace detail

/// Lowest grid frequency this replica can run at while the overall
/// reliability stays at or above the constraint (all other frequencies
/// fixed). Returns nothing when the replica is not part of the schedule or
/// carries no execution time.
inline std::optional<double> solve_boundary_frequency(const Schedule& s,
                                                      const TaskGraph& g,
                                                      const Platform& pf,
                                                      ReplicaRef ref, double r_req) {
    if (ref.task >= s.task_count() || ref.index >= s.replicas(ref.task).size())
        throw std::invalid_argument("replica reference outside the schedule");
    if (g.wcet(ref.task, s.replica(ref).processor) == 0.0) return std::nullopt;
    detail::FaState state(g, pf, s);
    const double ln_req = std::log(r_req);
    if (state.ln_total < ln_req - 1e-9)
        throw std::invalid_argument("schedule does not satisfy the constraint");

    const std::size_t k = s.replica(ref).processor;
    const Processor& proc = pf.proc(k);
    const double wcet = g.wcet(ref.task, k);
    const double need = state.required_ln(ref.task, ref.index, ln_req);
    const long lo = pf.grid_bottom(k);
    const long cur = state.grid_index[ref.task][ref.index];

    if (need == std::numeric_limits<double>::infinity())
        return pf.grid_frequency(lo);
    // Find the smallest grid index whose reliability still meets `need`;
    // ln reliability is increasing in frequency.
    auto ok = [&](long idx) {
        return ln_reliability(proc, wcet, pf.grid_frequency(idx)) >= need;
    };
    if (ok(lo)) return pf.grid_frequency(lo);
    if (!ok(cur)) return pf.grid_frequency(cur); // no slack at grid resolution
    long bad = lo, good = cur;
    while (good - bad > 1) {
        const long mid = bad + (good - bad) / 2;
        (ok(mid) ? good : bad) = mid;
    }
    return pf.grid_frequency(good);
}

/// Iterative frequency scaling: every round, each replica's boundary
/// frequency and the energy effect of moving halfway toward it are
/// computed; the replica with the largest saving moves (snapped to the
/// grid). Rounds continue until the overall reliability sits within zeta of
/// the constraint; when every replica is pinned at its floor or boundary
/// the remaining gap cannot be closed and the run stops early.
inline FaResult fa(const Schedule& input, const TaskGraph& g, const Platform& pf,
                   double r_req, const FaOptions& opts = {}) {
    require_complete(input);
    if (!(opts.zeta > 0.0)) throw std::invalid_argument("zeta must be positive");
    const double ln_req = std::log(r_req);

    detail::FaState state(g, pf, input);
    if (state.ln_total < ln_req - 1e-9)
        throw std::invalid_argument("fa: schedule violates the reliability "
                                    "constraint before scaling");

    const std::size_t cap = opts.max_iterations > 0
                                ? opts.max_iterations
                                : 10 * pf.size() * g.task_count();

    // Current per-replica energies; wcet-0 replicas never appear.
    struct Slot {
        TaskId task;
        std::size_t index;
        std::size_t proc;
        double wcet;
    };
    std::vector<Slot> slots;
    for (TaskId t = 0; t < input.task_count(); ++t)
        for (std::size_t j = 0; j < input.replicas(t).size(); ++j) {
            const Replica& r = input.replicas(t)[j];
            if (g.wcet(t, r.processor) > 0.0)
                slots.push_back({t, j, r.processor, g.wcet(t, r.processor)});
        }

    auto slot_energy = [&](const Slot& sl, long idx) {
        return energy(pf.proc(sl.proc), sl.wcet, pf.grid_frequency(idx));
    };
    auto total_energy = [&]() {
        double e = 0.0;
        for (const Slot& sl : slots)
            e += slot_energy(sl, state.grid_index[sl.task][sl.index]);
        return e;
    };

    FaResult res;
    res.energy = total_energy();

    while (std::abs(std::exp(state.ln_total) - r_req) >= opts.zeta) {
        // Scan all replicas: solve each boundary frequency and score the
        // halfway move that would actually be applied by the energy it
        // saves. Scoring the applied move (rather than the boundary, where
        // static power may already dominate) keeps the descent from
        // stalling while slack remains. The loop terminates on the
        // reliability window; when no move saves energy the least costly
        // one is taken, so the only dead end is a schedule whose replicas
        // are all pinned at their floors or boundaries.
        double best_drop = -std::numeric_limits<double>::infinity();
        std::size_t best_slot = slots.size();
        long best_boundary = 0, best_next = 0;
        for (std::size_t si = 0; si < slots.size(); ++si) {
            const Slot& sl = slots[si];
            const long cur = state.grid_index[sl.task][sl.index];
            const long lo = pf.grid_bottom(sl.proc);
            if (cur <= lo) continue;
            const double need = state.required_ln(sl.task, sl.index, ln_req);
            long boundary;
            if (need == std::numeric_limits<double>::infinity()) {
                boundary = lo;
            } else {
                const Processor& proc = pf.proc(sl.proc);
                auto ok = [&](long idx) {
                    return ln_reliability(proc, sl.wcet, pf.grid_frequency(idx)) >= need;
                };
                if (ok(lo)) {
                    boundary = lo;
                } else if (!ok(cur)) {
                    continue; // no slack at grid resolution
                } else {
                    long bad = lo, good = cur;
                    while (good - bad > 1) {
                        const long mid = bad + (good - bad) / 2;
                        (ok(mid) ? good : bad) = mid;
                    }
                    boundary = good;
                }
            }
            if (boundary >= cur) continue;
            long next = (cur + boundary + 1) / 2; // midpoint, rounded up
            if (next == cur) next = boundary;
            const double drop = slot_energy(sl, cur) - slot_energy(sl, next);
            if (drop > best_drop) {
                best_drop = drop;
                best_slot = si;
                best_boundary = boundary;
                best_next = next;
            }
        }
        if (best_slot == slots.size()) {
            res.early_stop = true;
            break;
        }

        const Slot& sl = slots[best_slot];
        const long cur = state.grid_index[sl.task][sl.index];
        const long next = best_next;
        state.grid_index[sl.task][sl.index] = next;
        state.ln_repl[sl.task][sl.index] = ln_reliability(
            pf.proc(sl.proc), sl.wcet, pf.grid_frequency(next));
        state.refresh_task(sl.task);
        state.refresh_total();
        ++res.iterations;
        if (state.ln_total < ln_req - 1e-9) ++res.safety_violations;
        if (opts.record_trace) {
            FaTraceStep step;
            step.task = sl.task;
            step.processor = sl.proc;
            step.f_before = pf.grid_frequency(cur);
            step.f_boundary = pf.grid_frequency(best_boundary);
            step.f_after = pf.grid_frequency(next);
            step.energy_drop = best_drop;
            step.energy_total = total_energy();
            step.reliability = std::exp(state.ln_total);
            res.trace.push_back(step);
        }
        if (res.iterations >= cap) {
            res.cap_hit = true;
            break;
        }
    }

    res.converged = std::abs(std::exp(state.ln_total) - r_req) < opts.zeta;
    res.ln_reliability = state.ln_total;

    // Apply the frequencies and re-derive the timing.
    Schedule scaled = input;
    for (const Slot& sl : slots)
        scaled.set_frequency({sl.task, sl.index},
                             pf.grid_frequency(state.grid_index[sl.task][sl.index]));
    res.schedule = rederive_times(g, scaled);
    res.energy = total_energy();
    return res;
}

} // namespace relsched
