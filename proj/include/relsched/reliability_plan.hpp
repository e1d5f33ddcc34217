#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <relsched/logspace.hpp>
#include <relsched/schedule.hpp>

namespace relsched {

/// Upward-rank priority values and the task order they induce.
struct RankTable {
    std::vector<double> urv;    // per task
    std::vector<TaskId> order;  // decreasing urv, ties by ascending task id
};

/// Bottom-up rank: mean execution time over processors plus, for non-exit
/// tasks, the largest successor edge weight plus successor rank. Sorting by
/// decreasing rank yields a topological order of the augmented graph.
inline RankTable up_rank(const TaskGraph& g) {
    const std::size_t n = g.task_count();
    RankTable table;
    table.urv.assign(n, 0.0);
    const auto& topo = g.topological_order();
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        const TaskId t = *it;
        double rank = g.mean_wcet(t);
        if (t != g.exit_task()) {
            double best = 0.0;
            for (const auto& [succ, w] : g.successors(t))
                best = std::max(best, w + table.urv[succ]);
            rank += best;
        }
        table.urv[t] = rank;
    }
    table.order.resize(n);
    for (TaskId t = 0; t < n; ++t) table.order[t] = t;
    std::sort(table.order.begin(), table.order.end(), [&table](TaskId a, TaskId b) {
        if (table.urv[a] != table.urv[b]) return table.urv[a] > table.urv[b];
        return a < b;
    });
    return table;
}

/// Wait time: the largest predecessor edge weight (time spent idle waiting
/// for inputs) plus the mean execution time. The entry task has no inputs.
inline std::vector<double> wait_times(const TaskGraph& g) {
    std::vector<double> w(g.task_count(), 0.0);
    for (TaskId t = 0; t < g.task_count(); ++t) {
        double in = 0.0;
        if (t != g.entry())
            for (const auto& [p, weight] : g.predecessors(t)) {
                (void)p;
                in = std::max(in, weight);
            }
        w[t] = in + g.mean_wcet(t);
    }
    return w;
}

/// Per-task reliability bounds whose product equals the constraint, plus the
/// running products that turn bounds into per-task targets during
/// allocation. All probabilities are kept as natural logarithms.
///
/// The bound of a task scales the constraint by the task's share of the best
/// achievable log-reliability. When the best achievable values are too close
/// to one for that ratio to be computable (within 1e-12 in log space), every
/// task falls back to the uniform bound r_req^(1/n).
class ReliabilityPlan {
public:
    ReliabilityPlan(const TaskGraph& g, const Platform& pf, double r_req,
                    ConstraintScenario scenario) {
        if (scenario == ConstraintScenario::Infeasible)
            throw std::invalid_argument("cannot build a reliability plan for an "
                                        "infeasible constraint");
        const std::size_t n = g.task_count();
        ln_r_req_ = std::log(r_req);
        ln_r_max_.resize(n);
        double ln_r_max_total = 0.0;
        double closest_real = neg_inf(); // largest ln r_max among real tasks
        for (TaskId t = 0; t < n; ++t) {
            ln_r_max_[t] = scenario == ConstraintScenario::NonFaultTolerant
                               ? ln_task_max_single(g, pf, t)
                               : ln_task_max_replicated(g, pf, t);
            ln_r_max_total += ln_r_max_[t];
            if (!g.is_dummy(t)) closest_real = std::max(closest_real, ln_r_max_[t]);
        }
        if (ln_r_req_ > ln_r_max_total + 1e-12)
            throw std::invalid_argument("constraint exceeds the best achievable "
                                        "reliability of this scenario");

        ln_bound_.assign(n, 0.0);
        uniform_fallback_ = std::abs(ln_r_max_total) < 1e-12 ||
                            (g.real_task_count() > 0 && std::abs(closest_real) < 1e-12);
        if (uniform_fallback_) {
            const double share = ln_r_req_ / static_cast<double>(n);
            for (TaskId t = 0; t < n; ++t) ln_bound_[t] = share;
        } else {
            for (TaskId t = 0; t < n; ++t) {
                const double ratio = ln_r_max_[t] / ln_r_max_total;
                ln_bound_[t] = ratio == 0.0 ? 0.0 : ln_r_req_ * ratio;
            }
        }
    }

    double ln_r_req() const { return ln_r_req_; }
    double ln_bound(TaskId t) const { return ln_bound_[t]; }
    double ln_r_max(TaskId t) const { return ln_r_max_[t]; }
    bool uniform_fallback() const { return uniform_fallback_; }

    double ln_bound_product() const {
        double s = 0.0;
        for (double b : ln_bound_) s += b;
        return s;
    }

    /// Target for the next task in the priority order: the constraint share
    /// left over after crediting the overshoot of already-placed tasks.
    /// Running products make this O(1) per task.
    double next_target_ln(TaskId t) {
        ln_bound_prefix_ += ln_bound_[t];
        const double target = ln_bound_prefix_ - ln_achieved_prefix_;
        if (target > ln_bound_[t] + 1e-9) ++target_above_bound_;
        pending_ = true;
        return target;
    }

    /// Records the reliability actually achieved for the task last targeted.
    void record_achieved(double ln_achieved) {
        if (!pending_) throw std::logic_error("record_achieved without a target");
        ln_achieved_prefix_ += ln_achieved;
        if (ln_achieved_prefix_ + 1e-9 < ln_bound_prefix_) ++prefix_below_bound_;
        pending_ = false;
    }

    double ln_achieved_total() const { return ln_achieved_prefix_; }

    /// Guardrail counters: how often a target exceeded its bound and how
    /// often the achieved prefix product fell behind the bound prefix. Both
    /// stay zero for any feasible constraint.
    std::size_t target_above_bound() const { return target_above_bound_; }
    std::size_t prefix_below_bound() const { return prefix_below_bound_; }

private:
    double ln_r_req_ = 0.0;
    std::vector<double> ln_r_max_;
    std::vector<double> ln_bound_;
    bool uniform_fallback_ = false;

    double ln_bound_prefix_ = 0.0;
    double ln_achieved_prefix_ = 0.0;
    bool pending_ = false;
    std::size_t target_above_bound_ = 0;
    std::size_t prefix_below_bound_ = 0;
};

} // namespace relsched
