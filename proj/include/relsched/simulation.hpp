#pragma once

#include <cstdint>
#include <queue>
#include <stdexcept>
#include <vector>

#include <relsched/schedule.hpp>

namespace relsched {

/// Simulated start/finish times, indexed like Schedule::placement_order().
struct SimulatedTimes {
    std::vector<double> start;
    std::vector<double> finish;
};

/// Discrete-event simulation of the mapped workflow: processors execute
/// their queued replicas in order, a replica starts once the processor is
/// free and every message from every predecessor replica has arrived, and
/// messages travel for the edge weight unless sender and receiver share the
/// processor. Independent of the analytic start-time recursion; both must
/// produce identical times for a valid schedule.
inline SimulatedTimes simulate(const Schedule& s, const TaskGraph& g,
                               const Platform& pf) {
    if (s.task_count() != g.task_count() || s.processor_count() != pf.size())
        throw std::invalid_argument("schedule shape does not match graph/platform");
    require_complete(s);

    const std::size_t n_repl = s.placement_order().size();
    // Flat replica ids in placement order.
    std::vector<std::vector<std::size_t>> flat_of_task(s.task_count());
    std::vector<ReplicaRef> refs(s.placement_order());
    for (std::size_t i = 0; i < n_repl; ++i)
        flat_of_task[refs[i].task].push_back(i);

    std::vector<std::size_t> missing(n_repl, 0);
    std::vector<double> arrival(n_repl, 0.0);
    for (std::size_t i = 0; i < n_repl; ++i) {
        std::size_t inputs = 0;
        for (const auto& [p, w] : g.predecessors(refs[i].task)) {
            (void)w;
            inputs += s.replicas(p).size();
        }
        missing[i] = inputs;
    }

    // Per-processor queues as indices into the flat id list.
    std::vector<std::vector<std::size_t>> queue_ids(s.processor_count());
    std::vector<std::size_t> queue_pos(s.processor_count(), 0);
    for (std::size_t k = 0; k < s.processor_count(); ++k)
        for (const ReplicaRef& ref : s.queue(k)) {
            std::size_t flat = 0;
            for (std::size_t cand : flat_of_task[ref.task])
                if (refs[cand].index == ref.index) flat = cand;
            queue_ids[k].push_back(flat);
        }

    enum class Kind : std::uint8_t { Finish, Message };
    struct Event {
        double time;
        std::uint64_t seq;
        Kind kind;
        std::size_t target; // finished replica, or message receiver
        double payload;     // message arrival value (== time)
        bool operator>(const Event& other) const {
            if (time != other.time) return time > other.time;
            return seq > other.seq;
        }
    };
    std::priority_queue<Event, std::vector<Event>, std::greater<>> events;
    std::uint64_t seq = 0;

    std::vector<double> start(n_repl, 0.0), finish(n_repl, 0.0);
    std::vector<bool> started(n_repl, false);
    std::vector<double> proc_free(s.processor_count(), 0.0);
    std::vector<bool> proc_busy(s.processor_count(), false);
    std::size_t done = 0;

    auto try_start = [&](std::size_t k) {
        if (proc_busy[k] || queue_pos[k] >= queue_ids[k].size()) return;
        const std::size_t i = queue_ids[k][queue_pos[k]];
        const TaskId t = refs[i].task;
        if (t != g.entry() && missing[i] > 0) return;
        const double st = t == g.entry() ? 0.0 : std::max(proc_free[k], arrival[i]);
        const Replica& r = s.replica(refs[i]);
        start[i] = st;
        finish[i] = st + g.wcet(t, k) / r.frequency;
        started[i] = true;
        proc_busy[k] = true;
        events.push({finish[i], seq++, Kind::Finish, i, 0.0});
    };

    for (std::size_t k = 0; k < s.processor_count(); ++k) try_start(k);

    while (!events.empty()) {
        const Event ev = events.top();
        events.pop();
        if (ev.kind == Kind::Finish) {
            const std::size_t i = ev.target;
            const std::size_t k = s.replica(refs[i]).processor;
            proc_free[k] = finish[i];
            proc_busy[k] = false;
            ++done;
            queue_pos[k]++;
            for (const auto& [succ, w] : g.successors(refs[i].task)) {
                for (std::size_t j : flat_of_task[succ]) {
                    const std::size_t dest = s.replica(refs[j]).processor;
                    const double at = dest == k ? finish[i] : finish[i] + w;
                    events.push({at, seq++, Kind::Message, j, at});
                }
            }
            try_start(k);
        } else {
            const std::size_t j = ev.target;
            arrival[j] = std::max(arrival[j], ev.payload);
            if (--missing[j] == 0)
                try_start(s.replica(refs[j]).processor);
        }
    }

    if (done != n_repl)
        throw std::runtime_error("simulation deadlock: processor queues are not "
                                 "compatible with the precedence constraints");
    SimulatedTimes out;
    out.start = std::move(start);
    out.finish = std::move(finish);
    return out;
}

/// True when simulated times equal the schedule's analytic times exactly
/// (bit-identical doubles).
inline bool simulation_matches(const Schedule& s, const TaskGraph& g,
                               const Platform& pf) {
    const SimulatedTimes sim = simulate(s, g, pf);
    const auto& order = s.placement_order();
    for (std::size_t i = 0; i < order.size(); ++i) {
        const Replica& r = s.replica(order[i]);
        if (sim.start[i] != r.start || sim.finish[i] != r.finish) return false;
    }
    return true;
}

} // namespace relsched
