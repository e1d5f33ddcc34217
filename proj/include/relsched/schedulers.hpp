#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <relsched/reliability_plan.hpp>
#include <relsched/schedule.hpp>

namespace relsched {

/// MERT knobs: alpha blends normalized finish time against normalized
/// execution time for the first `ell` tasks by descending wait time; the
/// remaining tasks are placed by lowest full-frequency energy.
struct MertConfig {
    double alpha = 0.5;
    std::size_t ell = 0;
};

struct SchedulerDiagnostics {
    std::vector<TaskId> task_order;      // tasks in the order they were placed
    std::vector<double> targets_ln;      // per placed task
    std::vector<double> bounds_ln;       // per placed task
    std::vector<std::size_t> candidates; // size of the feasible processor set
    std::size_t target_above_bound = 0;  // guardrail: target exceeded its bound
    std::size_t prefix_below_bound = 0;  // guardrail: achieved prefix fell behind
    std::size_t unmet_targets = 0;       // replica set exhausted below target
};

struct AllocationResult {
    Schedule schedule;                    // all replicas at maximum frequency
    std::vector<double> ln_task_reliability;
    double ln_reliability = 0.0;
    SchedulerDiagnostics diag;

    std::size_t replica_count() const { return schedule.replica_count(); }
};

namespace detail {

/// ln reliability of each processor for one task at maximum frequency.
inline std::vector<double> ln_rel_at_fmax(const TaskGraph& g, const Platform& pf,
                                          TaskId t) {
    std::vector<double> ln_r(pf.size());
    for (std::size_t k = 0; k < pf.size(); ++k)
        ln_r[k] = -pf.proc(k).lambda0 * g.wcet(t, k);
    return ln_r;
}

inline std::vector<double> energy_at_fmax(const TaskGraph& g, const Platform& pf,
                                          TaskId t) {
    std::vector<double> e(pf.size());
    for (std::size_t k = 0; k < pf.size(); ++k)
        e[k] = energy(pf.proc(k), g.wcet(t, k), 1.0);
    return e;
}

/// Feasible processors for a target; falls back to the most reliable
/// processor when rounding in the running products leaves the set empty
/// (the gap is then at most a few ulps).
inline std::vector<std::size_t> candidate_set(const std::vector<double>& ln_r,
                                              double target_ln) {
    std::vector<std::size_t> delta;
    for (std::size_t k = 0; k < ln_r.size(); ++k)
        if (ln_r[k] >= target_ln) delta.push_back(k);
    if (delta.empty()) {
        const auto best = std::max_element(ln_r.begin(), ln_r.end());
        delta.push_back(static_cast<std::size_t>(best - ln_r.begin()));
    }
    return delta;
}

inline void finish_result(AllocationResult& res, const ReliabilityPlan& plan) {
    res.ln_reliability = plan.ln_achieved_total();
    res.diag.target_above_bound = plan.target_above_bound();
    res.diag.prefix_below_bound = plan.prefix_below_bound();
}

} // namespace detail

/// Makespan/energy-aware allocation under a reliability constraint for the
/// non-fault-tolerant setting: one replica per task, tasks visited in
/// up-rank order, each placed on a feasible processor chosen either by the
/// blended finish/execution-time score (tasks with the `ell` largest wait
/// times) or by lowest energy.
inline AllocationResult mert(const TaskGraph& g, const Platform& pf, double r_req,
                             const MertConfig& cfg) {
    const auto analysis = analyze_scenario(g, pf, r_req);
    if (analysis.scenario != ConstraintScenario::NonFaultTolerant)
        throw std::invalid_argument(std::string("mert requires the non-fault-tolerant "
                                                "scenario; constraint classifies as ") +
                                    to_string(analysis.scenario));
    if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0))
        throw std::invalid_argument("alpha must lie in [0, 1]");
    if (cfg.ell > g.task_count())
        throw std::invalid_argument("ell must lie in [0, task count]");

    const RankTable rank = up_rank(g);
    const std::vector<double> wait = wait_times(g);

    // Rank positions in the priority order, used to break wait-time ties.
    std::vector<std::size_t> rho_pos(g.task_count());
    for (std::size_t i = 0; i < rank.order.size(); ++i) rho_pos[rank.order[i]] = i;
    std::vector<TaskId> by_wait(g.task_count());
    std::iota(by_wait.begin(), by_wait.end(), TaskId{0});
    std::sort(by_wait.begin(), by_wait.end(), [&](TaskId a, TaskId b) {
        if (wait[a] != wait[b]) return wait[a] > wait[b];
        return rho_pos[a] < rho_pos[b];
    });
    std::vector<std::size_t> wait_rank(g.task_count());
    for (std::size_t i = 0; i < by_wait.size(); ++i) wait_rank[by_wait[i]] = i;

    ReliabilityPlan plan(g, pf, r_req, ConstraintScenario::NonFaultTolerant);
    ScheduleBuilder builder(g, pf);
    AllocationResult res;
    res.ln_task_reliability.assign(g.task_count(), 0.0);

    for (const TaskId t : rank.order) {
        const double target_ln = plan.next_target_ln(t);
        const auto ln_r = detail::ln_rel_at_fmax(g, pf, t);
        const auto delta = detail::candidate_set(ln_r, target_ln);
        res.diag.task_order.push_back(t);
        res.diag.targets_ln.push_back(target_ln);
        res.diag.bounds_ln.push_back(plan.ln_bound(t));
        res.diag.candidates.push_back(delta.size());

        std::size_t chosen = delta.front();
        if (wait_rank[t] < cfg.ell) {
            // Blend of finish and execution time, min-max normalized over
            // all processors; degenerate spans contribute zero.
            std::vector<double> ft(pf.size());
            double ft_min = std::numeric_limits<double>::infinity(), ft_max = 0.0;
            double et_min = std::numeric_limits<double>::infinity(), et_max = 0.0;
            for (std::size_t k = 0; k < pf.size(); ++k) {
                ft[k] = builder.earliest_finish(t, k, 1.0);
                ft_min = std::min(ft_min, ft[k]);
                ft_max = std::max(ft_max, ft[k]);
                et_min = std::min(et_min, g.wcet(t, k));
                et_max = std::max(et_max, g.wcet(t, k));
            }
            double best_score = std::numeric_limits<double>::infinity();
            for (const std::size_t k : delta) {
                const double ft_norm =
                    ft_max > ft_min ? (ft[k] - ft_min) / (ft_max - ft_min) : 0.0;
                const double et_norm =
                    et_max > et_min ? (g.wcet(t, k) - et_min) / (et_max - et_min) : 0.0;
                const double score = cfg.alpha * ft_norm + (1.0 - cfg.alpha) * et_norm;
                if (score < best_score) {
                    best_score = score;
                    chosen = k;
                }
            }
        } else {
            double best_energy = std::numeric_limits<double>::infinity();
            for (const std::size_t k : delta) {
                const double e = energy(pf.proc(k), g.wcet(t, k), 1.0);
                if (e < best_energy) {
                    best_energy = e;
                    chosen = k;
                }
            }
        }
        builder.place(t, chosen, 1.0);
        res.ln_task_reliability[t] = ln_r[chosen];
        plan.record_achieved(ln_r[chosen]);
    }
    res.schedule = builder.take();
    detail::finish_result(res, plan);
    return res;
}

inline std::vector<double> default_alpha_grid() {
    std::vector<double> a;
    for (int i = 0; i <= 10; ++i) a.push_back(i / 10.0);
    return a;
}

inline std::vector<std::size_t> default_ell_grid(std::size_t n) {
    std::vector<std::size_t> e{0, (n + 3) / 4, (n + 1) / 2, (3 * n + 3) / 4, n};
    std::sort(e.begin(), e.end());
    e.erase(std::unique(e.begin(), e.end()), e.end());
    return e;
}

struct SweepGrids {
    std::vector<double> alphas = default_alpha_grid();
    std::vector<std::size_t> ells; // empty: use default_ell_grid(task count)
};

struct MertSweepEntry {
    MertConfig config;
    AllocationResult result;
};

/// One MERT run per (alpha, ell) grid point, in grid order.
inline std::vector<MertSweepEntry> mert_sweep(const TaskGraph& g, const Platform& pf,
                                              double r_req, const SweepGrids& grids) {
    std::vector<std::size_t> ells =
        grids.ells.empty() ? default_ell_grid(g.task_count()) : grids.ells;
    std::vector<MertSweepEntry> out;
    out.reserve(grids.alphas.size() * ells.size());
    for (const double alpha : grids.alphas)
        for (const std::size_t ell : ells) {
            MertConfig cfg{alpha, ell};
            out.push_back({cfg, mert(g, pf, r_req, cfg)});
        }
    return out;
}

/// Energy-aware fault-tolerant allocation: tasks in up-rank order, replicas
/// added cheapest-first until the task's reliability target is met. Also
/// accepts non-fault-tolerant constraints, where it degenerates to a
/// min-energy single-replica allocation whenever one replica suffices.
inline AllocationResult eafts(const TaskGraph& g, const Platform& pf, double r_req) {
    const auto analysis = analyze_scenario(g, pf, r_req);
    if (analysis.scenario == ConstraintScenario::Infeasible)
        throw std::invalid_argument("eafts: constraint is infeasible on this platform");

    const RankTable rank = up_rank(g);
    ReliabilityPlan plan(g, pf, r_req, analysis.scenario);
    ScheduleBuilder builder(g, pf);
    AllocationResult res;
    res.ln_task_reliability.assign(g.task_count(), 0.0);

    for (const TaskId t : rank.order) {
        const double target_ln = plan.next_target_ln(t);
        const auto ln_r = detail::ln_rel_at_fmax(g, pf, t);
        const auto e = detail::energy_at_fmax(g, pf, t);
        std::vector<std::size_t> order(pf.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (e[a] != e[b]) return e[a] < e[b];
            if (ln_r[a] != ln_r[b]) return ln_r[a] > ln_r[b];
            return a < b;
        });

        double ln_all_fail = 0.0;
        double ln_task = neg_inf();
        std::size_t used = 0;
        for (const std::size_t k : order) {
            builder.place(t, k, 1.0);
            ++used;
            ln_all_fail += ln_complement(ln_r[k]);
            ln_task = ln_one_minus_exp(ln_all_fail);
            if (ln_task >= target_ln) break;
        }
        if (ln_task < target_ln) ++res.diag.unmet_targets;
        res.diag.task_order.push_back(t);
        res.diag.targets_ln.push_back(target_ln);
        res.diag.bounds_ln.push_back(plan.ln_bound(t));
        res.diag.candidates.push_back(used);
        res.ln_task_reliability[t] = ln_task;
        plan.record_achieved(ln_task);
    }
    res.schedule = builder.take();
    detail::finish_result(res, plan);
    return res;
}

/// Maximum-reliability baseline: each task on the processor with the lowest
/// fault exposure at full frequency, ignoring energy and makespan.
inline AllocationResult mr(const TaskGraph& g, const Platform& pf) {
    if (g.processor_count() != pf.size())
        throw std::invalid_argument("graph and platform disagree on processor count");
    const RankTable rank = up_rank(g);
    ScheduleBuilder builder(g, pf);
    AllocationResult res;
    res.ln_task_reliability.assign(g.task_count(), 0.0);
    for (const TaskId t : rank.order) {
        const auto ln_r = detail::ln_rel_at_fmax(g, pf, t);
        std::size_t best = 0;
        for (std::size_t k = 1; k < pf.size(); ++k)
            if (ln_r[k] > ln_r[best]) best = k;
        builder.place(t, best, 1.0);
        res.ln_task_reliability[t] = ln_r[best];
    }
    res.schedule = builder.take();
    for (TaskId t = 0; t < g.task_count(); ++t)
        res.ln_reliability += res.ln_task_reliability[t];
    return res;
}

namespace detail {

/// Shared core of the replication baselines: replicas in descending
/// single-copy reliability until the per-task target is met. `next_target`
/// yields the target for each real task in priority order; `on_achieved`
/// reports the reliability the task ended up with. `uniform_bound_ln` is the
/// per-task share both baselines assume, recorded for diagnostics.
template <typename TargetFn, typename AchievedFn>
inline AllocationResult replicate_to_targets(const TaskGraph& g, const Platform& pf,
                                             double r_req, double uniform_bound_ln,
                                             TargetFn&& next_target,
                                             AchievedFn&& on_achieved) {
    const auto analysis = analyze_scenario(g, pf, r_req);
    if (analysis.scenario == ConstraintScenario::Infeasible)
        throw std::invalid_argument("constraint is infeasible on this platform");
    const RankTable rank = up_rank(g);
    ScheduleBuilder builder(g, pf);
    AllocationResult res;
    res.ln_task_reliability.assign(g.task_count(), 0.0);

    for (const TaskId t : rank.order) {
        const auto ln_r = ln_rel_at_fmax(g, pf, t);
        std::vector<std::size_t> order(pf.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (ln_r[a] != ln_r[b]) return ln_r[a] > ln_r[b];
            return a < b;
        });
        const double target_ln = g.is_dummy(t) ? 0.0 : next_target(t);
        if (!g.is_dummy(t)) {
            res.diag.task_order.push_back(t);
            res.diag.targets_ln.push_back(target_ln);
            res.diag.bounds_ln.push_back(uniform_bound_ln);
        }

        double ln_all_fail = 0.0;
        double ln_task = neg_inf();
        std::size_t used = 0;
        for (const std::size_t k : order) {
            builder.place(t, k, 1.0);
            ++used;
            ln_all_fail += ln_complement(ln_r[k]);
            ln_task = ln_one_minus_exp(ln_all_fail);
            if (ln_task >= target_ln) break;
        }
        if (ln_task < target_ln) ++res.diag.unmet_targets;
        res.diag.candidates.push_back(used);
        res.ln_task_reliability[t] = ln_task;
        res.ln_reliability += ln_task;
        if (!g.is_dummy(t)) on_achieved(t, ln_task);
    }
    res.schedule = builder.take();
    return res;
}

} // namespace detail

/// Replication baseline with a fixed per-task target r_req^(1/n) over the
/// n real tasks.
inline AllocationResult maxre(const TaskGraph& g, const Platform& pf, double r_req) {
    const double n_real = static_cast<double>(g.real_task_count());
    const double share = n_real > 0.0 ? std::log(r_req) / n_real : 0.0;
    return detail::replicate_to_targets(
        g, pf, r_req, share, [share](TaskId) { return share; }, [](TaskId, double) {});
}

/// Replication baseline that re-derives the target of each task from the
/// reliability already banked by earlier tasks, with all remaining tasks
/// assumed to sit at the uniform share r_req^(1/n).
inline AllocationResult rr(const TaskGraph& g, const Platform& pf, double r_req) {
    const double ln_req = std::log(r_req);
    const double n_real = static_cast<double>(g.real_task_count());
    double banked = 0.0;   // ln product of achieved reliabilities so far
    std::size_t index = 0; // 1-based position among real tasks
    return detail::replicate_to_targets(
        g, pf, r_req,
        [&](TaskId) {
            ++index;
            return (ln_req * static_cast<double>(index)) / n_real - banked;
        },
        [&](TaskId, double ln_achieved) { banked += ln_achieved; });
}

} // namespace relsched
