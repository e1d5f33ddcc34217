#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <queue>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <relsched/rng.hpp>

namespace relsched {

using TaskId = std::size_t;

struct Edge {
    TaskId from = 0;
    TaskId to = 0;
    double weight = 0.0; // communication time when endpoints run on different processors
};

/// A workflow before augmentation: execution-time matrix (task x processor,
/// measured at maximum frequency) plus weighted dependency edges.
struct RawDag {
    std::size_t processor_count = 0;
    std::vector<std::vector<double>> wcet; // one row per task
    std::vector<Edge> edges;

    std::size_t task_count() const { return wcet.size(); }
};

class CycleError : public std::runtime_error {
public:
    explicit CycleError(const std::string& what) : std::runtime_error(what) {}
};

/// Immutable augmented workflow DAG. Task 0 is the synthetic entry task and
/// task n-1 the synthetic exit task; both have zero execution time everywhere
/// and are attached with zero-weight edges. All other tasks are "real" and
/// have strictly positive execution times.
class TaskGraph {
public:
    TaskGraph() = default;

    std::size_t task_count() const { return wcet_.size(); }
    std::size_t real_task_count() const { return task_count() - 2; }
    std::size_t processor_count() const { return processor_count_; }

    TaskId entry() const { return 0; }
    TaskId exit_task() const { return task_count() - 1; }
    bool is_dummy(TaskId t) const { return t == entry() || t == exit_task(); }

    double wcet(TaskId t, std::size_t proc) const { return wcet_[t][proc]; }
    const std::vector<double>& wcet_row(TaskId t) const { return wcet_[t]; }
    double mean_wcet(TaskId t) const { return mean_wcet_[t]; }

    /// Successors of t with the weight of the connecting edge.
    const std::vector<std::pair<TaskId, double>>& successors(TaskId t) const {
        return succ_[t];
    }
    const std::vector<std::pair<TaskId, double>>& predecessors(TaskId t) const {
        return pred_[t];
    }
    const std::vector<Edge>& edges() const { return edges_; }

    /// Deterministic topological order: entry first, exit last, smallest id
    /// among simultaneously ready tasks.
    const std::vector<TaskId>& topological_order() const { return topo_; }

    friend TaskGraph augment(const RawDag& raw);

private:
    std::size_t processor_count_ = 0;
    std::vector<std::vector<double>> wcet_;
    std::vector<double> mean_wcet_;
    std::vector<Edge> edges_;
    std::vector<std::vector<std::pair<TaskId, double>>> succ_;
    std::vector<std::vector<std::pair<TaskId, double>>> pred_;
    std::vector<TaskId> topo_;

    void build_and_validate();
};

namespace detail {

/// Topological order by Kahn's algorithm; throws CycleError with a witness
/// path when the graph has a cycle.
inline std::vector<TaskId> topological_sort(
    std::size_t n, const std::vector<std::vector<std::pair<TaskId, double>>>& succ,
    const std::vector<std::vector<std::pair<TaskId, double>>>& pred) {
    std::vector<std::size_t> indeg(n, 0);
    for (TaskId t = 0; t < n; ++t) indeg[t] = pred[t].size();
    std::priority_queue<TaskId, std::vector<TaskId>, std::greater<>> ready;
    for (TaskId t = 0; t < n; ++t)
        if (indeg[t] == 0) ready.push(t);
    std::vector<TaskId> order;
    order.reserve(n);
    while (!ready.empty()) {
        TaskId t = ready.top();
        ready.pop();
        order.push_back(t);
        for (const auto& [s, w] : succ[t]) {
            (void)w;
            if (--indeg[s] == 0) ready.push(s);
        }
    }
    if (order.size() == n) return order;

    // Extract a concrete cycle among the unsorted remainder for the error.
    std::vector<bool> stuck(n, false);
    for (TaskId t = 0; t < n; ++t) stuck[t] = indeg[t] > 0;
    TaskId start = 0;
    while (!stuck[start]) ++start;
    std::vector<TaskId> path;
    std::vector<int> seen(n, -1);
    TaskId cur = start;
    while (seen[cur] < 0) {
        seen[cur] = static_cast<int>(path.size());
        path.push_back(cur);
        TaskId next = cur;
        for (const auto& [s, w] : succ[cur]) {
            (void)w;
            if (stuck[s]) {
                next = s;
                break;
            }
        }
        cur = next;
    }
    std::string msg = "cycle detected: ";
    for (std::size_t i = seen[cur]; i < path.size(); ++i)
        msg += "v" + std::to_string(path[i]) + " -> ";
    msg += "v" + std::to_string(cur);
    throw CycleError(msg);
}

} // namespace detail

inline void TaskGraph::build_and_validate() {
    const std::size_t n = wcet_.size();
    if (n < 2) throw std::invalid_argument("augmented graph needs entry and exit tasks");
    if (processor_count_ == 0) throw std::invalid_argument("graph needs processors");

    succ_.assign(n, {});
    pred_.assign(n, {});
    std::set<std::pair<TaskId, TaskId>> seen;
    for (const Edge& e : edges_) {
        if (e.from >= n || e.to >= n)
            throw std::invalid_argument("edge endpoint out of range");
        if (e.from == e.to) throw CycleError("cycle detected: v" + std::to_string(e.from) +
                                             " -> v" + std::to_string(e.to));
        if (e.weight < 0.0) throw std::invalid_argument("negative edge weight");
        if (!seen.insert({e.from, e.to}).second)
            throw std::invalid_argument("duplicate edge v" + std::to_string(e.from) +
                                        " -> v" + std::to_string(e.to));
        succ_[e.from].push_back({e.to, e.weight});
        pred_[e.to].push_back({e.from, e.weight});
    }
    for (TaskId t = 0; t < n; ++t) {
        std::sort(succ_[t].begin(), succ_[t].end());
        std::sort(pred_[t].begin(), pred_[t].end());
    }

    mean_wcet_.assign(n, 0.0);
    for (TaskId t = 0; t < n; ++t) {
        if (wcet_[t].size() != processor_count_)
            throw std::invalid_argument("wcet row of task v" + std::to_string(t) +
                                        " has arity " + std::to_string(wcet_[t].size()) +
                                        ", expected " + std::to_string(processor_count_));
        for (double w : wcet_[t]) {
            const bool dummy = (t == 0 || t + 1 == n);
            if (dummy && w != 0.0)
                throw std::invalid_argument("entry/exit task must have zero wcet");
            if (!dummy && !(w > 0.0))
                throw std::invalid_argument("real task v" + std::to_string(t) +
                                            " must have positive wcet");
        }
        mean_wcet_[t] = std::accumulate(wcet_[t].begin(), wcet_[t].end(), 0.0) /
                        static_cast<double>(processor_count_);
    }

    topo_ = detail::topological_sort(n, succ_, pred_);

    if (!pred_[0].empty() || !succ_[n - 1].empty())
        throw std::invalid_argument("entry must have no predecessors and exit no successors");
    for (TaskId t = 1; t < n; ++t)
        if (pred_[t].empty())
            throw std::invalid_argument("task v" + std::to_string(t) +
                                        " is an extra source; augmentation broken");
    for (TaskId t = 0; t + 1 < n; ++t)
        if (succ_[t].empty())
            throw std::invalid_argument("task v" + std::to_string(t) +
                                        " is an extra sink; augmentation broken");
    for (const auto& [s, w] : succ_[0])
        if (w != 0.0) throw std::invalid_argument("entry edges must have zero weight");
    for (const auto& [p, w] : pred_[n - 1])
        if (w != 0.0) throw std::invalid_argument("exit edges must have zero weight");
}

/// Adds the synthetic entry/exit tasks around a raw DAG. Idempotent: a graph
/// that already has the augmented shape (a unique zero-wcet source and sink
/// attached by zero-weight edges) is returned unchanged.
inline TaskGraph augment(const RawDag& raw) {
    const std::size_t n = raw.task_count();
    if (n == 0) throw std::invalid_argument("cannot augment an empty workflow");
    if (raw.processor_count == 0) throw std::invalid_argument("workflow needs processors");
    for (const auto& row : raw.wcet)
        if (row.size() != raw.processor_count)
            throw std::invalid_argument("wcet row arity does not match processor count");

    std::vector<std::size_t> indeg(n, 0), outdeg(n, 0);
    std::vector<std::vector<std::pair<TaskId, double>>> raw_succ(n), raw_pred(n);
    for (const Edge& e : raw.edges) {
        if (e.from >= n || e.to >= n)
            throw std::invalid_argument("edge endpoint out of range");
        ++outdeg[e.from];
        ++indeg[e.to];
        raw_succ[e.from].push_back({e.to, e.weight});
        raw_pred[e.to].push_back({e.from, e.weight});
        if (e.from == e.to)
            throw CycleError("cycle detected: v" + std::to_string(e.from) + " -> v" +
                             std::to_string(e.to));
    }
    // Detect cycles before renumbering so the witness names the caller's ids.
    detail::topological_sort(n, raw_succ, raw_pred);
    auto zero_row = [&raw](TaskId t) {
        return std::all_of(raw.wcet[t].begin(), raw.wcet[t].end(),
                           [](double w) { return w == 0.0; });
    };

    bool already = false;
    if (n >= 2 && indeg[0] == 0 && outdeg[n - 1] == 0 && zero_row(0) && zero_row(n - 1)) {
        bool unique_source = true, unique_sink = true, zero_edges = true;
        for (TaskId t = 1; t < n; ++t)
            if (indeg[t] == 0) unique_source = false;
        for (TaskId t = 0; t + 1 < n; ++t)
            if (outdeg[t] == 0) unique_sink = false;
        for (const Edge& e : raw.edges)
            if ((e.from == 0 || e.to == n - 1) && e.weight != 0.0) zero_edges = false;
        already = unique_source && unique_sink && zero_edges;
    }

    TaskGraph g;
    g.processor_count_ = raw.processor_count;
    if (already) {
        g.wcet_ = raw.wcet;
        g.edges_ = raw.edges;
    } else {
        g.wcet_.reserve(n + 2);
        g.wcet_.push_back(std::vector<double>(raw.processor_count, 0.0));
        for (const auto& row : raw.wcet) g.wcet_.push_back(row);
        g.wcet_.push_back(std::vector<double>(raw.processor_count, 0.0));
        g.edges_.reserve(raw.edges.size() + n);
        for (const Edge& e : raw.edges)
            g.edges_.push_back({e.from + 1, e.to + 1, e.weight});
        for (TaskId t = 0; t < n; ++t) {
            if (indeg[t] == 0) g.edges_.push_back({0, t + 1, 0.0});
            if (outdeg[t] == 0) g.edges_.push_back({t + 1, n + 1, 0.0});
        }
    }
    g.build_and_validate();
    return g;
}

/// Settings for the benchmark workflow generators. Execution times are
/// integer draws from [wcet_min, wcet_max]; edge weights are integer draws
/// whose mean equals ccr times the mean execution time.
struct GeneratorConfig {
    std::uint64_t seed = 1;
    std::size_t processors = 32;
    int wcet_min = 10;
    int wcet_max = 100;
    double ccr = 1.0;
};

namespace detail {

inline TaskGraph finish_generated(RawDag&& raw, const GeneratorConfig& cfg) {
    if (cfg.processors == 0) throw std::invalid_argument("generator needs processors");
    if (cfg.wcet_min < 1 || cfg.wcet_max < cfg.wcet_min)
        throw std::invalid_argument("invalid wcet range");
    if (cfg.ccr <= 0.0) throw std::invalid_argument("ccr must be positive");

    auto eng = make_engine(cfg.seed);
    std::uniform_int_distribution<int> wcet_dist(cfg.wcet_min, cfg.wcet_max);
    const int w_lo = std::max(1, static_cast<int>(std::lround(cfg.ccr * cfg.wcet_min)));
    const int w_hi = std::max(w_lo, static_cast<int>(std::lround(cfg.ccr * cfg.wcet_max)));
    std::uniform_int_distribution<int> weight_dist(w_lo, w_hi);

    raw.processor_count = cfg.processors;
    for (auto& row : raw.wcet) {
        row.resize(cfg.processors);
        for (auto& w : row) w = static_cast<double>(wcet_dist(eng));
    }
    for (auto& e : raw.edges) e.weight = static_cast<double>(weight_dist(eng));
    return augment(raw);
}

} // namespace detail

/// Recursive FFT workflow: a binary recursion tree with 2^rho leaves feeding
/// rho butterfly stages of 2^rho tasks each; (2+rho) * 2^rho - 1 tasks total.
inline TaskGraph generate_fft(unsigned rho, const GeneratorConfig& cfg) {
    if (rho < 1) throw std::invalid_argument("fft generator requires rho >= 1");
    if (rho > 20) throw std::invalid_argument("fft generator limited to rho <= 20");
    const std::size_t points = std::size_t{1} << rho;

    RawDag raw;
    const std::size_t n = (2 + rho) * points - 1;
    raw.wcet.resize(n);

    // Recursion tree: level d holds 2^d tasks, children 2i and 2i+1.
    auto tree_id = [](unsigned level, std::size_t i) {
        return (std::size_t{1} << level) - 1 + i;
    };
    for (unsigned level = 0; level < rho; ++level) {
        for (std::size_t i = 0; i < (std::size_t{1} << level); ++i) {
            raw.edges.push_back({tree_id(level, i), tree_id(level + 1, 2 * i), 0.0});
            raw.edges.push_back({tree_id(level, i), tree_id(level + 1, 2 * i + 1), 0.0});
        }
    }
    const std::size_t tree_size = 2 * points - 1;
    auto leaf_id = [&](std::size_t i) { return tree_id(rho, i); };
    auto stage_id = [&](unsigned stage, std::size_t i) {
        return tree_size + static_cast<std::size_t>(stage) * points + i;
    };

    // Butterfly stages; stage s pairs elements at distance 2^(rho-1-s).
    for (unsigned s = 0; s < rho; ++s) {
        const std::size_t dist = points >> (s + 1);
        for (std::size_t i = 0; i < points; ++i) {
            const std::size_t a = i, b = i ^ dist;
            if (s == 0) {
                raw.edges.push_back({leaf_id(a), stage_id(0, i), 0.0});
                raw.edges.push_back({leaf_id(b), stage_id(0, i), 0.0});
            } else {
                raw.edges.push_back({stage_id(s - 1, a), stage_id(s, i), 0.0});
                raw.edges.push_back({stage_id(s - 1, b), stage_id(s, i), 0.0});
            }
        }
    }
    return detail::finish_generated(std::move(raw), cfg);
}

/// Gaussian-elimination workflow for a rho x rho system: rho - 1 elimination
/// steps, step k being one pivot task feeding rho - k update tasks;
/// (rho^2 + rho - 2) / 2 tasks total.
inline TaskGraph generate_ge(unsigned rho, const GeneratorConfig& cfg) {
    if (rho < 2) throw std::invalid_argument("ge generator requires rho >= 2");
    if (rho > 2000) throw std::invalid_argument("ge generator limited to rho <= 2000");

    RawDag raw;
    const std::size_t n = (static_cast<std::size_t>(rho) * rho + rho - 2) / 2;
    raw.wcet.resize(n);

    // Step k (1-based) occupies a contiguous block: pivot, then updates for
    // columns k+1 .. rho.
    std::vector<std::size_t> step_base(rho, 0);
    std::size_t next = 0;
    for (unsigned k = 1; k < rho; ++k) {
        step_base[k] = next;
        next += 1 + (rho - k);
    }
    auto pivot_id = [&](unsigned k) { return step_base[k]; };
    auto update_id = [&](unsigned k, unsigned col) {
        return step_base[k] + 1 + (col - (k + 1));
    };

    for (unsigned k = 1; k < rho; ++k) {
        for (unsigned col = k + 1; col <= rho; ++col)
            raw.edges.push_back({pivot_id(k), update_id(k, col), 0.0});
        if (k + 1 < rho) {
            raw.edges.push_back({update_id(k, k + 1), pivot_id(k + 1), 0.0});
            for (unsigned col = k + 2; col <= rho; ++col)
                raw.edges.push_back({update_id(k, col), update_id(k + 1, col), 0.0});
        }
    }
    return detail::finish_generated(std::move(raw), cfg);
}

} // namespace relsched
