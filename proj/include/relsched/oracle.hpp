#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <relsched/logspace.hpp>
#include <relsched/schedule.hpp>

namespace relsched {

struct OracleLimits {
    std::size_t max_real_tasks = 6;
    std::size_t max_processors = 3;
    std::size_t max_states = 2'000'000; // Pareto frontier size guard
};

struct OracleResult {
    bool feasible = false;
    double energy = 0.0;         // minimum energy meeting the constraint
    double ln_reliability = 0.0; // reliability of that optimum
};

/// Exhaustive minimum-energy search over every task-to-processor-subset
/// assignment with every per-replica frequency from the platform grid.
/// Energy and reliability decompose per task, so the search enumerates the
/// per-task (energy, reliability) options exactly and combines them task by
/// task, discarding dominated partial assignments; pruning dominated points
/// never removes an optimal completion. Intended as an independent check on
/// the heuristics for tiny instances (run it with a coarse frequency grid).
inline OracleResult brute_force_oracle(const TaskGraph& g, const Platform& pf,
                                       double r_req, const OracleLimits& limits = {}) {
    if (g.processor_count() != pf.size())
        throw std::invalid_argument("graph and platform disagree on processor count");
    if (g.real_task_count() > limits.max_real_tasks)
        throw std::invalid_argument("oracle refuses: too many tasks");
    if (pf.size() > limits.max_processors)
        throw std::invalid_argument("oracle refuses: too many processors");

    const std::size_t m = pf.size();
    const double ln_req = std::log(r_req);

    struct Point {
        double energy;
        double ln_rel;
    };
    auto pareto = [](std::vector<Point>& pts) {
        // Keep, per ascending energy, only strictly improving reliability.
        std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
            if (a.energy != b.energy) return a.energy < b.energy;
            return a.ln_rel > b.ln_rel;
        });
        std::vector<Point> front;
        double best = neg_inf();
        for (const Point& p : pts) {
            if (p.ln_rel > best) {
                front.push_back(p);
                best = p.ln_rel;
            }
        }
        pts = std::move(front);
    };

    // Grid frequencies per processor.
    std::vector<std::vector<double>> freqs(m);
    for (std::size_t k = 0; k < m; ++k)
        for (long idx = pf.grid_bottom(k); idx <= pf.grid_top(); ++idx)
            freqs[k].push_back(pf.grid_frequency(idx));

    std::vector<Point> states{{0.0, 0.0}};
    for (TaskId t = 0; t < g.task_count(); ++t) {
        if (g.is_dummy(t)) continue;

        // All (subset, frequency vector) options of this task.
        std::vector<Point> options;
        for (std::size_t subset = 1; subset < (std::size_t{1} << m); ++subset) {
            std::vector<std::size_t> procs;
            for (std::size_t k = 0; k < m; ++k)
                if (subset & (std::size_t{1} << k)) procs.push_back(k);
            std::vector<std::size_t> pick(procs.size(), 0);
            while (true) {
                double e = 0.0, ln_all_fail = 0.0;
                for (std::size_t i = 0; i < procs.size(); ++i) {
                    const std::size_t k = procs[i];
                    const double f = freqs[k][pick[i]];
                    e += energy(pf.proc(k), g.wcet(t, k), f);
                    ln_all_fail += ln_complement(ln_reliability(pf.proc(k), g.wcet(t, k), f));
                }
                options.push_back({e, ln_one_minus_exp(ln_all_fail)});
                if (options.size() > limits.max_states)
                    throw std::invalid_argument("oracle refuses: frequency grid too fine");
                // Next frequency combination.
                std::size_t i = 0;
                while (i < procs.size() && ++pick[i] == freqs[procs[i]].size()) {
                    pick[i] = 0;
                    ++i;
                }
                if (i == procs.size()) break;
            }
        }
        pareto(options);

        std::vector<Point> next;
        next.reserve(states.size() * options.size());
        for (const Point& s : states)
            for (const Point& o : options)
                next.push_back({s.energy + o.energy, s.ln_rel + o.ln_rel});
        if (next.size() > limits.max_states)
            throw std::invalid_argument("oracle refuses: state space too large");
        pareto(next);
        states = std::move(next);
    }

    OracleResult res;
    for (const Point& s : states) {
        if (s.ln_rel >= ln_req) {
            res.feasible = true;
            res.energy = s.energy;
            res.ln_reliability = s.ln_rel;
            break; // states are energy-sorted; first feasible is optimal
        }
    }
    return res;
}

} // namespace relsched
