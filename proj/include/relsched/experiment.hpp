#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <relsched/frequency_allocation.hpp>
#include <relsched/io.hpp>
#include <relsched/oracle.hpp>
#include <relsched/rng.hpp>
#include <relsched/schedulers.hpp>
#include <relsched/simulation.hpp>

namespace relsched {

enum class Algorithm { Mert, Eafts, Mr, MaxRe, Rr };

inline const char* to_string(Algorithm a) {
    switch (a) {
        case Algorithm::Mert: return "mert";
        case Algorithm::Eafts: return "eafts";
        case Algorithm::Mr: return "mr";
        case Algorithm::MaxRe: return "maxre";
        default: return "rr";
    }
}

inline Algorithm parse_algorithm(const std::string& s) {
    if (s == "mert") return Algorithm::Mert;
    if (s == "eafts") return Algorithm::Eafts;
    if (s == "mr") return Algorithm::Mr;
    if (s == "maxre") return Algorithm::MaxRe;
    if (s == "rr") return Algorithm::Rr;
    throw std::invalid_argument("unknown algorithm '" + s + "'");
}

struct WorkloadSpec {
    enum class Kind { Fft, Ge, File };
    Kind kind = Kind::Fft;
    unsigned rho = 5;
    std::string path; // Kind::File
};

enum class SweepMode { NonFaultTolerant, FaultTolerant };

/// Constraint grid: 0.90..0.99 by 0.01 then 0.991..0.999 by 0.001.
inline std::vector<double> default_eta_grid_non_ft() {
    std::vector<double> g;
    for (int i = 90; i <= 99; ++i) g.push_back(i / 100.0);
    for (int i = 991; i <= 999; ++i) g.push_back(i / 1000.0);
    return g;
}

/// Parameter ranges used by the experiment protocol. Sampled f_min values
/// are kept away from 1 so the fault-rate exponent stays well-conditioned.
inline ParameterRanges experiment_ranges() {
    ParameterRanges r;
    r.f_min_hi = 0.9;
    return r;
}

struct ExperimentConfig {
    WorkloadSpec workload;
    std::size_t processors = 32;
    ParameterRanges ranges = experiment_ranges();
    double frequency_step = 0.0001;
    double ccr = 1.0;
    std::uint64_t seed = 1;
    std::size_t instances = 30;
    SweepMode mode = SweepMode::NonFaultTolerant;
    std::vector<double> eta_grid;      // non-ft only; empty: default grid
    double eta_ft_start = 1.001;       // ft grid start and step
    double eta_ft_step = 0.001;
    std::vector<Algorithm> algorithms; // empty: defaults per mode
    SweepGrids mert_grids;
    FaOptions fa_options;
    std::size_t resample_cap = 1000;   // ft instance filtering attempts
    std::size_t jobs = 1;
};

struct ReportRow {
    std::size_t instance = 0;
    std::uint64_t seed = 0;
    double eta = 0.0;
    std::string algorithm;
    double r_req = 0.0;
    double makespan = 0.0;
    double energy = 0.0;
    double reliability = 1.0;
    std::size_t replicas = 0; // over real tasks
    bool fallback = false;    // comparison rule fell back to min energy
    double runtime_ms = 0.0;  // wall clock; kept out of the deterministic CSVs
};

struct AggregateRow {
    double eta = 0.0;
    std::string algorithm;
    double mean_makespan = 0.0;
    double mean_energy = 0.0;
    double mean_reliability = 0.0;
    double mean_replicas = 0.0;
    std::size_t instances = 0;
};

struct ExperimentReport {
    std::vector<ReportRow> rows;
    std::vector<AggregateRow> aggregates;
    double eta_max = 0.0;              // ft mode: top of the common grid
    std::size_t resample_attempts = 0; // ft mode: instances drawn in total
    std::size_t lemma_target_violations = 0;
    std::size_t lemma_prefix_violations = 0;
    std::size_t constraint_violations = 0; // rows with reliability < r_req - zeta
    std::size_t fa_runs = 0;
    std::size_t fa_cap_hits = 0;
    std::size_t fa_early_stops = 0;
    std::size_t fa_window_misses = 0; // reliability outside [r_req, r_req+zeta)
    std::size_t energy_monotonicity_violations = 0;
};

/// E_best: the lowest energy among the baseline family.
inline double best_baseline_energy(const std::vector<double>& baseline_energies) {
    if (baseline_energies.empty())
        throw std::invalid_argument("comparison rule needs a nonempty baseline family");
    double best = baseline_energies.front();
    for (double e : baseline_energies) best = std::min(best, e);
    return best;
}

/// Selects from a family of (energy, makespan) candidates: the best makespan
/// among members with energy <= e_best; when no member qualifies, the
/// minimum-energy member with the fallback flag set.
struct FamilySelection {
    std::size_t index = 0;
    bool fallback = false;
};

inline FamilySelection compare_rule(const std::vector<std::pair<double, double>>& family,
                                    double e_best) {
    if (family.empty())
        throw std::invalid_argument("comparison rule needs a nonempty candidate family");
    FamilySelection sel;
    bool any = false;
    for (std::size_t i = 0; i < family.size(); ++i) {
        const auto& [energy, makespan] = family[i];
        if (energy <= e_best) {
            if (!any || makespan < family[sel.index].second ||
                (makespan == family[sel.index].second && energy < family[sel.index].first)) {
                sel.index = i;
                any = true;
            }
        }
    }
    if (!any) {
        sel.fallback = true;
        for (std::size_t i = 1; i < family.size(); ++i)
            if (family[i].first < family[sel.index].first) sel.index = i;
    }
    return sel;
}

namespace detail {

struct Instance {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    TaskGraph graph;
    Platform platform;
    double ln_r_max_non_ft = 0.0;
    double ln_r_max_ft = 0.0;
    double r_max_non_ft = 1.0;
};

inline Instance make_instance(const ExperimentConfig& cfg, std::size_t index) {
    Instance inst;
    inst.index = index;
    inst.seed = derive_seed(cfg.seed, index);
    GeneratorConfig gen;
    gen.seed = derive_seed(inst.seed, 0);
    gen.processors = cfg.processors;
    gen.ccr = cfg.ccr;
    switch (cfg.workload.kind) {
        case WorkloadSpec::Kind::Fft:
            inst.graph = generate_fft(cfg.workload.rho, gen);
            break;
        case WorkloadSpec::Kind::Ge:
            inst.graph = generate_ge(cfg.workload.rho, gen);
            break;
        case WorkloadSpec::Kind::File:
            inst.graph = io::load_workflow(cfg.workload.path);
            break;
    }
    inst.platform = random_platform(inst.graph.processor_count(), cfg.ranges,
                                    derive_seed(inst.seed, 1), cfg.frequency_step);
    const auto a = analyze_scenario(inst.graph, inst.platform, 0.5);
    inst.ln_r_max_non_ft = a.ln_r_max_non_ft;
    inst.ln_r_max_ft = a.ln_r_max_ft;
    inst.r_max_non_ft = std::exp(a.ln_r_max_non_ft);
    return inst;
}

/// Largest k >= 0 such that eta_start + k*step keeps the constraint within
/// the fault-tolerant maximum; -1 when not even the first point fits.
inline long ft_grid_top(const Instance& inst, double eta_start, double eta_step) {
    long k = -1;
    for (long cand = 0; cand < 200000; ++cand) {
        const double eta = eta_start + cand * eta_step;
        const double r_req = eta * inst.r_max_non_ft;
        if (!(r_req < 1.0) || std::log(r_req) > inst.ln_r_max_ft) break;
        k = cand;
    }
    return k;
}

struct PipelineOutcome {
    ReportRow row;
    FaResult fa_result;
};

inline PipelineOutcome run_pipeline(const Instance& inst, Algorithm algo, double eta,
                                    double r_req, const ExperimentConfig& cfg,
                                    ExperimentReport& report) {
    const auto t0 = std::chrono::steady_clock::now();
    AllocationResult alloc;
    switch (algo) {
        case Algorithm::Mert: {
            // MERT rows go through the sweep + comparison rule instead.
            MertConfig single{0.5, (inst.graph.task_count() + 1) / 2};
            alloc = mert(inst.graph, inst.platform, r_req, single);
            break;
        }
        case Algorithm::Eafts: alloc = eafts(inst.graph, inst.platform, r_req); break;
        case Algorithm::Mr: alloc = mr(inst.graph, inst.platform); break;
        case Algorithm::MaxRe: alloc = maxre(inst.graph, inst.platform, r_req); break;
        case Algorithm::Rr: alloc = rr(inst.graph, inst.platform, r_req); break;
    }
    report.lemma_target_violations += alloc.diag.target_above_bound;
    report.lemma_prefix_violations += alloc.diag.prefix_below_bound;

    FaResult scaled = fa(alloc.schedule, inst.graph, inst.platform, r_req, cfg.fa_options);
    const auto t1 = std::chrono::steady_clock::now();

    validate_schedule(scaled.schedule, inst.graph, inst.platform);

    PipelineOutcome out;
    out.row.instance = inst.index;
    out.row.seed = inst.seed;
    out.row.eta = eta;
    out.row.algorithm = std::string(to_string(algo)) + "+fa";
    out.row.r_req = r_req;
    out.row.makespan = makespan(scaled.schedule);
    out.row.energy = scaled.energy;
    out.row.reliability = std::exp(scaled.ln_reliability);
    out.row.replicas = scaled.schedule.replica_count() - 2; // dummies excluded
    out.row.runtime_ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count();
    out.fa_result = std::move(scaled);
    return out;
}

inline void note_fa(const FaResult& fa_res, double r_req, double zeta,
                    ExperimentReport& report) {
    ++report.fa_runs;
    if (fa_res.cap_hit) ++report.fa_cap_hits;
    if (fa_res.early_stop) ++report.fa_early_stops;
    const double rel = std::exp(fa_res.ln_reliability);
    if (!(fa_res.ln_reliability >= std::log(r_req) - 1e-9 && rel < r_req + zeta))
        ++report.fa_window_misses;
    if (fa_res.ln_reliability < std::log(r_req) - 1e-9) ++report.constraint_violations;
}

} // namespace detail

/// Runs the full sweep protocol and returns the report. Deterministic for a
/// fixed configuration; per-row wall-clock timings are the only exception
/// and are kept out of the CSV files meant for comparison.
inline ExperimentReport run_sweep(const ExperimentConfig& cfg) {
    if (cfg.instances < 1) throw std::invalid_argument("instance count must be >= 1");
    ExperimentReport report;

    std::vector<Algorithm> algos = cfg.algorithms;
    if (algos.empty()) {
        algos = cfg.mode == SweepMode::NonFaultTolerant
                    ? std::vector<Algorithm>{Algorithm::Mert, Algorithm::Mr}
                    : std::vector<Algorithm>{Algorithm::Eafts, Algorithm::MaxRe,
                                             Algorithm::Rr};
    }

    // Assemble the instance set. In the fault-tolerant mode the common grid
    // top is the largest per-instance top of an initial batch, and instances
    // are redrawn until `instances` of them support that grid.
    std::vector<detail::Instance> instances;
    std::vector<double> eta_grid = cfg.eta_grid;
    if (cfg.mode == SweepMode::NonFaultTolerant) {
        if (eta_grid.empty()) eta_grid = default_eta_grid_non_ft();
        for (double eta : eta_grid)
            if (!(eta > 0.0 && eta <= 1.0))
                throw std::invalid_argument("non-fault-tolerant eta must lie in (0, 1]");
        for (std::size_t i = 0; i < cfg.instances; ++i)
            instances.push_back(detail::make_instance(cfg, i));
        report.resample_attempts = cfg.instances;
    } else {
        long top = -1;
        std::size_t next_index = 0;
        for (std::size_t i = 0; i < cfg.instances; ++i) {
            auto inst = detail::make_instance(cfg, next_index++);
            top = std::max(top, detail::ft_grid_top(inst, cfg.eta_ft_start,
                                                    cfg.eta_ft_step));
        }
        if (top < 0)
            throw std::runtime_error("no instance supports the fault-tolerant grid");
        report.eta_max = cfg.eta_ft_start + top * cfg.eta_ft_step;
        while (instances.size() < cfg.instances && next_index < cfg.resample_cap) {
            auto inst = detail::make_instance(cfg, next_index++);
            if (detail::ft_grid_top(inst, cfg.eta_ft_start, cfg.eta_ft_step) >= top)
                instances.push_back(std::move(inst));
        }
        report.resample_attempts = next_index;
        if (instances.size() < cfg.instances)
            throw std::runtime_error(
                "fault-tolerant instance filtering exhausted its attempt budget (" +
                std::to_string(cfg.resample_cap) + " draws, " +
                std::to_string(instances.size()) + " accepted)");
        for (long k = 0; k <= top; ++k)
            eta_grid.push_back(cfg.eta_ft_start + k * cfg.eta_ft_step);
    }

    const bool want_mert =
        std::find(algos.begin(), algos.end(), Algorithm::Mert) != algos.end();

    // Per-instance work, collected into separate buckets so that worker
    // threads never interleave rows.
    std::vector<std::vector<ReportRow>> buckets(instances.size());
    std::vector<ExperimentReport> partials(instances.size());

    auto run_instance = [&](std::size_t ii) {
        const detail::Instance& inst = instances[ii];
        ExperimentReport& part = partials[ii];
        std::vector<double> prev_energy(algos.size(),
                                        -std::numeric_limits<double>::infinity());
        for (const double eta : eta_grid) {
            const double r_req = eta * inst.r_max_non_ft;
            std::vector<double> baseline_energies;
            std::vector<ReportRow> eta_rows;

            for (std::size_t ai = 0; ai < algos.size(); ++ai) {
                const Algorithm algo = algos[ai];
                if (algo == Algorithm::Mert) continue;
                auto out = detail::run_pipeline(inst, algo, eta, r_req, cfg, part);
                detail::note_fa(out.fa_result, r_req, cfg.fa_options.zeta, part);
                baseline_energies.push_back(out.row.energy);
                if (out.row.energy + 1e-9 < prev_energy[ai])
                    ++part.energy_monotonicity_violations;
                prev_energy[ai] = out.row.energy;
                eta_rows.push_back(std::move(out.row));
            }

            if (want_mert) {
                const auto t0 = std::chrono::steady_clock::now();
                SweepGrids grids = cfg.mert_grids;
                auto family = mert_sweep(inst.graph, inst.platform, r_req, grids);
                std::vector<std::pair<double, double>> candidates;
                std::vector<FaResult> scaled;
                scaled.reserve(family.size());
                for (auto& member : family) {
                    part.lemma_target_violations += member.result.diag.target_above_bound;
                    part.lemma_prefix_violations += member.result.diag.prefix_below_bound;
                    FaResult f = fa(member.result.schedule, inst.graph, inst.platform,
                                    r_req, cfg.fa_options);
                    detail::note_fa(f, r_req, cfg.fa_options.zeta, part);
                    candidates.push_back({f.energy, makespan(f.schedule)});
                    scaled.push_back(std::move(f));
                }
                const double e_best =
                    baseline_energies.empty()
                        ? std::numeric_limits<double>::infinity()
                        : best_baseline_energy(baseline_energies);
                const FamilySelection sel = compare_rule(candidates, e_best);
                const FaResult& chosen = scaled[sel.index];
                validate_schedule(chosen.schedule, inst.graph, inst.platform);
                const auto t1 = std::chrono::steady_clock::now();

                ReportRow row;
                row.instance = inst.index;
                row.seed = inst.seed;
                row.eta = eta;
                row.algorithm = "mert+fa";
                row.r_req = r_req;
                row.makespan = candidates[sel.index].second;
                row.energy = candidates[sel.index].first;
                row.reliability = std::exp(chosen.ln_reliability);
                row.replicas = chosen.schedule.replica_count() - 2;
                row.fallback = sel.fallback;
                row.runtime_ms =
                    std::chrono::duration<double, std::milli>(t1 - t0).count();
                // Keep mert rows in the configured algorithm position.
                std::size_t mert_pos = 0;
                for (std::size_t ai = 0; ai < algos.size(); ++ai)
                    if (algos[ai] == Algorithm::Mert)
                        mert_pos = std::min<std::size_t>(ai, eta_rows.size());
                eta_rows.insert(eta_rows.begin() + mert_pos, std::move(row));
            }
            for (auto& r : eta_rows) buckets[ii].push_back(std::move(r));
        }
    };

    if (cfg.jobs <= 1 || instances.size() <= 1) {
        for (std::size_t ii = 0; ii < instances.size(); ++ii) run_instance(ii);
    } else {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        const std::size_t workers = std::min(cfg.jobs, instances.size());
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&]() {
                for (std::size_t ii = next.fetch_add(1); ii < instances.size();
                     ii = next.fetch_add(1))
                    run_instance(ii);
            });
        for (auto& th : pool) th.join();
    }

    for (std::size_t ii = 0; ii < instances.size(); ++ii) {
        for (auto& r : buckets[ii]) report.rows.push_back(std::move(r));
        const ExperimentReport& p = partials[ii];
        report.lemma_target_violations += p.lemma_target_violations;
        report.lemma_prefix_violations += p.lemma_prefix_violations;
        report.constraint_violations += p.constraint_violations;
        report.fa_runs += p.fa_runs;
        report.fa_cap_hits += p.fa_cap_hits;
        report.fa_early_stops += p.fa_early_stops;
        report.fa_window_misses += p.fa_window_misses;
        report.energy_monotonicity_violations += p.energy_monotonicity_violations;
    }

    // Aggregates: arithmetic means per (eta, algorithm), in grid order.
    std::vector<std::string> algo_names;
    for (const ReportRow& r : report.rows)
        if (std::find(algo_names.begin(), algo_names.end(), r.algorithm) ==
            algo_names.end())
            algo_names.push_back(r.algorithm);
    for (const double eta : eta_grid) {
        for (const std::string& name : algo_names) {
            AggregateRow agg;
            agg.eta = eta;
            agg.algorithm = name;
            for (const ReportRow& r : report.rows) {
                if (r.eta == eta && r.algorithm == name) {
                    agg.mean_makespan += r.makespan;
                    agg.mean_energy += r.energy;
                    agg.mean_reliability += r.reliability;
                    agg.mean_replicas += static_cast<double>(r.replicas);
                    ++agg.instances;
                }
            }
            if (agg.instances == 0) continue;
            const double n = static_cast<double>(agg.instances);
            agg.mean_makespan /= n;
            agg.mean_energy /= n;
            agg.mean_reliability /= n;
            agg.mean_replicas /= n;
            report.aggregates.push_back(std::move(agg));
        }
    }
    return report;
}

// ---- CSV output -------------------------------------------------------------

namespace detail {

inline std::string csv_double(double v) { return io::detail::format_double(v); }

} // namespace detail

/// One record per instance x eta x algorithm. Deterministic for a fixed
/// configuration (timings live in their own file).
inline void write_rows_csv(const ExperimentReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open file for writing");
    out << "# schema: relsched-rows v1\n";
    out << "instance,seed,eta,algorithm,r_req,makespan,energy,reliability,replicas,"
           "fallback\n";
    for (const ReportRow& r : report.rows) {
        out << r.instance << ',' << r.seed << ',' << detail::csv_double(r.eta) << ','
            << r.algorithm << ',' << detail::csv_double(r.r_req) << ','
            << detail::csv_double(r.makespan) << ',' << detail::csv_double(r.energy)
            << ',' << detail::csv_double(r.reliability) << ',' << r.replicas << ','
            << (r.fallback ? 1 : 0) << '\n';
    }
}

inline void write_aggregates_csv(const ExperimentReport& report,
                                 const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open file for writing");
    out << "# schema: relsched-aggregates v1\n";
    out << "eta,algorithm,mean_makespan,mean_energy,mean_reliability,mean_replicas,"
           "instances\n";
    for (const AggregateRow& a : report.aggregates) {
        out << detail::csv_double(a.eta) << ',' << a.algorithm << ','
            << detail::csv_double(a.mean_makespan) << ','
            << detail::csv_double(a.mean_energy) << ','
            << detail::csv_double(a.mean_reliability) << ','
            << detail::csv_double(a.mean_replicas) << ',' << a.instances << '\n';
    }
}

/// Wall-clock timings; non-deterministic by nature, hence a separate file.
inline void write_timing_csv(const ExperimentReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open file for writing");
    out << "# schema: relsched-timing v1\n";
    out << "instance,eta,algorithm,runtime_ms\n";
    for (const ReportRow& r : report.rows)
        out << r.instance << ',' << detail::csv_double(r.eta) << ',' << r.algorithm
            << ',' << detail::csv_double(r.runtime_ms) << '\n';
}

} // namespace relsched
