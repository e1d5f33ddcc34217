#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <relsched/logspace.hpp>
#include <relsched/platform.hpp>
#include <relsched/task_graph.hpp>

namespace relsched {

/// One placed copy of a task. `finish` always equals
/// start + wcet(task, processor) / frequency.
struct Replica {
    TaskId task = 0;
    std::size_t processor = 0;
    double frequency = 1.0;
    double start = 0.0;
    double finish = 0.0;
};

/// Reference to a replica as (task, index within the task's replica set).
struct ReplicaRef {
    TaskId task = 0;
    std::size_t index = 0;
};

/// A complete or partial schedule: the task-to-processor(s) mapping, the
/// per-replica frequencies, and the derived start/finish times. Processor
/// queues are append-only (a task starts after the queue's previous task
/// has finished), and `placement_order` records the global order in which
/// replicas were appended so times can be re-derived after frequency changes.
class Schedule {
public:
    Schedule() = default;
    Schedule(std::size_t task_count, std::size_t processor_count)
        : replicas_(task_count), queues_(processor_count) {}

    std::size_t task_count() const { return replicas_.size(); }
    std::size_t processor_count() const { return queues_.size(); }

    const std::vector<Replica>& replicas(TaskId t) const { return replicas_[t]; }
    const Replica& replica(ReplicaRef r) const { return replicas_[r.task][r.index]; }
    const std::vector<ReplicaRef>& queue(std::size_t proc) const { return queues_[proc]; }
    const std::vector<ReplicaRef>& placement_order() const { return placement_; }

    bool scheduled(TaskId t) const { return !replicas_[t].empty(); }
    bool complete() const {
        return std::all_of(replicas_.begin(), replicas_.end(),
                           [](const auto& r) { return !r.empty(); });
    }
    std::size_t replica_count() const { return placement_.size(); }

    /// Earliest free time of a processor under the append-only queue rule.
    double available(std::size_t proc) const {
        return queues_[proc].empty() ? 0.0 : replica(queues_[proc].back()).finish;
    }

    /// Appends a replica with precomputed times. Used by builders and IO.
    ReplicaRef append(const Replica& r) {
        if (r.task >= task_count() || r.processor >= processor_count())
            throw std::out_of_range("replica references unknown task or processor");
        replicas_[r.task].push_back(r);
        ReplicaRef ref{r.task, replicas_[r.task].size() - 1};
        queues_[r.processor].push_back(ref);
        placement_.push_back(ref);
        return ref;
    }

    void set_frequency(ReplicaRef ref, double f) {
        replicas_[ref.task][ref.index].frequency = f;
    }

private:
    std::vector<std::vector<Replica>> replicas_; // by task
    std::vector<std::vector<ReplicaRef>> queues_; // by processor, queue order
    std::vector<ReplicaRef> placement_;           // global append order
};

/// Time at which every predecessor output of `task` has arrived at `proc`:
/// the max over all replicas of all predecessors of finish plus the edge
/// weight when the replica ran on a different processor. Successors wait for
/// every replica of a predecessor.
inline double ready_time(const TaskGraph& g, const Schedule& s, TaskId task,
                         std::size_t proc) {
    double ready = 0.0;
    for (const auto& [p, w] : g.predecessors(task)) {
        if (!s.scheduled(p))
            throw std::logic_error("predecessor v" + std::to_string(p) +
                                   " of v" + std::to_string(task) +
                                   " is not scheduled yet");
        for (const Replica& r : s.replicas(p)) {
            const double arrival = r.processor == proc ? r.finish : r.finish + w;
            ready = std::max(ready, arrival);
        }
    }
    return ready;
}

/// Earliest start of `task` on `proc` given the partial schedule: the later
/// of the processor's availability and the predecessor ready time. The entry
/// task always starts at time zero.
inline double earliest_start(const TaskGraph& g, const Schedule& s, TaskId task,
                             std::size_t proc) {
    if (task == g.entry()) return 0.0;
    return std::max(s.available(proc), ready_time(g, s, task, proc));
}

/// Incrementally builds a schedule in a precedence-compatible placement
/// order, deriving times as replicas are appended.
class ScheduleBuilder {
public:
    ScheduleBuilder(const TaskGraph& g, const Platform& pf)
        : graph_(g), schedule_(g.task_count(), pf.size()) {
        if (g.processor_count() != pf.size())
            throw std::invalid_argument("graph and platform disagree on processor count");
    }

    const Schedule& schedule() const { return schedule_; }

    double earliest_start(TaskId task, std::size_t proc) const {
        return relsched::earliest_start(graph_, schedule_, task, proc);
    }
    double earliest_finish(TaskId task, std::size_t proc, double frequency) const {
        return earliest_start(task, proc) + graph_.wcet(task, proc) / frequency;
    }

    ReplicaRef place(TaskId task, std::size_t proc, double frequency) {
        Replica r;
        r.task = task;
        r.processor = proc;
        r.frequency = frequency;
        r.start = earliest_start(task, proc);
        r.finish = r.start + graph_.wcet(task, proc) / frequency;
        return schedule_.append(r);
    }

    Schedule take() { return std::move(schedule_); }

private:
    const TaskGraph& graph_;
    Schedule schedule_;
};

/// Re-derives all start/finish times from the mapping, frequencies, and
/// placement order. Used after frequency allocation changes durations.
inline Schedule rederive_times(const TaskGraph& g, const Schedule& s) {
    Schedule out(s.task_count(), s.processor_count());
    for (const ReplicaRef& ref : s.placement_order()) {
        const Replica& old = s.replica(ref);
        Replica r = old;
        r.start = earliest_start(g, out, r.task, r.processor);
        r.finish = r.start + g.wcet(r.task, r.processor) / r.frequency;
        out.append(r);
    }
    return out;
}

inline void require_complete(const Schedule& s) {
    if (!s.complete())
        throw std::logic_error("schedule is incomplete: some task has no replica");
}

/// Finish time of the last replica; equals the exit task's finish for any
/// schedule built in a topological placement order.
inline double makespan(const Schedule& s) {
    require_complete(s);
    double m = 0.0;
    for (const ReplicaRef& ref : s.placement_order())
        m = std::max(m, s.replica(ref).finish);
    return m;
}

/// ln reliability of one task under active replication: the task fails only
/// if every replica fails.
inline double ln_task_reliability(const TaskGraph& g, const Platform& pf,
                                  const std::vector<Replica>& replicas) {
    if (replicas.empty()) throw std::logic_error("task has no replicas");
    std::set<std::size_t> procs;
    double ln_all_fail = 0.0;
    for (const Replica& r : replicas) {
        if (!procs.insert(r.processor).second)
            throw std::invalid_argument("duplicate processor in replica set of task v" +
                                        std::to_string(r.task));
        const double ln_r =
            ln_reliability(pf.proc(r.processor), g.wcet(r.task, r.processor), r.frequency);
        ln_all_fail += ln_complement(ln_r);
    }
    return ln_one_minus_exp(ln_all_fail);
}

inline double task_reliability(const TaskGraph& g, const Platform& pf,
                               const std::vector<Replica>& replicas) {
    return std::exp(ln_task_reliability(g, pf, replicas));
}

inline double ln_schedule_reliability(const Schedule& s, const TaskGraph& g,
                                      const Platform& pf) {
    require_complete(s);
    double ln_total = 0.0;
    for (TaskId t = 0; t < s.task_count(); ++t)
        ln_total += ln_task_reliability(g, pf, s.replicas(t));
    return ln_total;
}

inline double schedule_reliability(const Schedule& s, const TaskGraph& g,
                                   const Platform& pf) {
    return std::exp(ln_schedule_reliability(s, g, pf));
}

inline double schedule_energy(const Schedule& s, const TaskGraph& g, const Platform& pf) {
    require_complete(s);
    double total = 0.0;
    for (const ReplicaRef& ref : s.placement_order()) {
        const Replica& r = s.replica(ref);
        total += energy(pf.proc(r.processor), g.wcet(r.task, r.processor), r.frequency);
    }
    return total;
}

enum class ConstraintScenario { NonFaultTolerant, FaultTolerant, Infeasible };

inline const char* to_string(ConstraintScenario s) {
    switch (s) {
        case ConstraintScenario::NonFaultTolerant: return "non-fault-tolerant";
        case ConstraintScenario::FaultTolerant: return "fault-tolerant";
        default: return "infeasible";
    }
}

/// Best achievable ln reliability of a single task at maximum frequency:
/// on its most reliable processor, or on all processors at once.
inline double ln_task_max_single(const TaskGraph& g, const Platform& pf, TaskId t) {
    double best = neg_inf();
    for (std::size_t k = 0; k < pf.size(); ++k)
        best = std::max(best, -pf.proc(k).lambda0 * g.wcet(t, k));
    return best;
}

inline double ln_task_max_replicated(const TaskGraph& g, const Platform& pf, TaskId t) {
    if (g.is_dummy(t)) return 0.0;
    double ln_all_fail = 0.0;
    for (std::size_t k = 0; k < pf.size(); ++k)
        ln_all_fail += ln_complement(-pf.proc(k).lambda0 * g.wcet(t, k));
    double v = ln_one_minus_exp(ln_all_fail);
    // A real task is never perfectly reliable, even when the double rounds
    // that way; keep the value strictly negative.
    return std::min(v, -1e-300);
}

struct ScenarioAnalysis {
    ConstraintScenario scenario = ConstraintScenario::Infeasible;
    double ln_r_max_non_ft = 0.0; // every task on its most reliable processor
    double ln_r_max_ft = 0.0;     // every task on all processors
};

inline ScenarioAnalysis analyze_scenario(const TaskGraph& g, const Platform& pf,
                                         double r_req) {
    if (g.processor_count() != pf.size())
        throw std::invalid_argument("graph and platform disagree on processor count");
    if (!(r_req >= 0.0 && r_req <= 1.0))
        throw std::invalid_argument("reliability constraint must lie in [0, 1]");
    ScenarioAnalysis a;
    for (TaskId t = 0; t < g.task_count(); ++t) {
        a.ln_r_max_non_ft += ln_task_max_single(g, pf, t);
        a.ln_r_max_ft += ln_task_max_replicated(g, pf, t);
    }
    const double ln_req = std::log(r_req);
    // Boundary comparisons are inclusive. The slop is relative to the bound
    // itself so that r_req computed as exp(ln_r_max) classifies as feasible
    // despite the exp/log round trip, while r_req = 1 stays infeasible no
    // matter how close the fault-tolerant maximum sits to one.
    auto within = [](double ln_value, double ln_bound) {
        return ln_value <= ln_bound - 1e-12 * ln_bound;
    };
    if (within(ln_req, a.ln_r_max_non_ft))
        a.scenario = ConstraintScenario::NonFaultTolerant;
    else if (within(ln_req, a.ln_r_max_ft))
        a.scenario = ConstraintScenario::FaultTolerant;
    else
        a.scenario = ConstraintScenario::Infeasible;
    return a;
}

inline ConstraintScenario classify(const TaskGraph& g, const Platform& pf, double r_req) {
    return analyze_scenario(g, pf, r_req).scenario;
}

/// Structural validation of a complete schedule: replica sets, frequency
/// ranges, timing consistency, per-processor non-overlap, and precedence.
inline void validate_schedule(const Schedule& s, const TaskGraph& g, const Platform& pf) {
    if (s.task_count() != g.task_count() || s.processor_count() != pf.size())
        throw std::invalid_argument("schedule shape does not match graph/platform");
    require_complete(s);
    for (TaskId t = 0; t < s.task_count(); ++t) {
        std::set<std::size_t> procs;
        for (const Replica& r : s.replicas(t)) {
            if (r.task != t) throw std::invalid_argument("replica task id mismatch");
            if (!procs.insert(r.processor).second)
                throw std::invalid_argument("replicas of task v" + std::to_string(t) +
                                            " share a processor");
            const Processor& p = pf.proc(r.processor);
            if (!(r.frequency >= p.f_min && r.frequency <= 1.0))
                throw std::invalid_argument("replica frequency out of range for task v" +
                                            std::to_string(t));
            const double expect = r.start + g.wcet(t, r.processor) / r.frequency;
            if (r.finish != expect)
                throw std::invalid_argument("finish time of task v" + std::to_string(t) +
                                            " does not match start + wcet/f");
        }
    }
    for (std::size_t k = 0; k < s.processor_count(); ++k) {
        double prev_finish = 0.0;
        for (const ReplicaRef& ref : s.queue(k)) {
            const Replica& r = s.replica(ref);
            if (r.start + 1e-12 < prev_finish)
                throw std::invalid_argument("overlapping executions on processor " +
                                            std::to_string(k));
            prev_finish = r.finish;
        }
    }
    for (TaskId t = 0; t < s.task_count(); ++t) {
        if (t == g.entry()) continue;
        for (const Replica& r : s.replicas(t)) {
            const double ready = ready_time(g, s, t, r.processor);
            if (r.start + 1e-12 < ready)
                throw std::invalid_argument("task v" + std::to_string(t) +
                                            " starts before its inputs arrive");
        }
    }
}

} // namespace relsched
