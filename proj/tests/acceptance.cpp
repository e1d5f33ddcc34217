// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Heavier than the unit tests; expect a few minutes.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <vector>

#include <relsched/experiment.hpp>

using namespace relsched;

namespace {

struct Tally {
    int passed = 0;
    int failed = 0;
};

void report(Tally& tally, int number, bool ok, const std::string& detail) {
    std::printf("criterion %d: %s — %s\n", number, ok ? "PASS" : "FAIL",
                detail.c_str());
    std::fflush(stdout);
    (ok ? tally.passed : tally.failed)++;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Shared bookkeeping for the lemma guardrails (criterion 8).
std::size_t g_lemma_violations = 0;

void absorb_diag(const SchedulerDiagnostics& diag) {
    g_lemma_violations += diag.target_above_bound + diag.prefix_below_bound;
}

struct Instance {
    TaskGraph graph;
    Platform platform;
    double ln_r_max_non_ft = 0.0;
    double ln_r_max_ft = 0.0;
    double r_max_non_ft = 1.0;
};

Instance make_fft_instance(std::uint64_t seed, unsigned rho, std::size_t m) {
    Instance inst;
    GeneratorConfig gen;
    gen.seed = derive_seed(seed, 0);
    gen.processors = m;
    inst.graph = generate_fft(rho, gen);
    inst.platform = random_platform(m, experiment_ranges(), derive_seed(seed, 1));
    const auto a = analyze_scenario(inst.graph, inst.platform, 0.5);
    inst.ln_r_max_non_ft = a.ln_r_max_non_ft;
    inst.ln_r_max_ft = a.ln_r_max_ft;
    inst.r_max_non_ft = std::exp(a.ln_r_max_non_ft);
    return inst;
}

// ---- criterion 1: generator exactness --------------------------------------

bool criterion_generators(std::string& detail) {
    const auto t0 = std::chrono::steady_clock::now();
    GeneratorConfig cfg;
    cfg.processors = 32;
    bool ok = true;
    for (unsigned rho = 1; rho <= 6; ++rho) {
        const std::size_t expect = (2 + rho) * (std::size_t{1} << rho) - 1;
        ok = ok && generate_fft(rho, cfg).real_task_count() == expect;
    }
    ok = ok && generate_fft(5, cfg).real_task_count() == 223;
    for (unsigned rho = 2; rho <= 25; ++rho) {
        const std::size_t expect = (static_cast<std::size_t>(rho) * rho + rho - 2) / 2;
        ok = ok && generate_ge(rho, cfg).real_task_count() == expect;
    }
    ok = ok && generate_ge(20, cfg).real_task_count() == 209;
    const double secs = seconds_since(t0);
    ok = ok && secs < 1.0;
    std::ostringstream os;
    os << "fft rho 1..6 and ge rho 2..25 exact (223/209 spot checks) in "
       << secs << " s";
    detail = os.str();
    return ok;
}

// ---- criteria 2 and 3: feasibility and frequency-allocation safety ---------

long ft_grid_points(const Instance& inst) {
    long k = -1;
    for (long cand = 0; cand < 100000; ++cand) {
        const double r_req = (1.001 + cand * 0.001) * inst.r_max_non_ft;
        if (!(r_req < 1.0) || std::log(r_req) > inst.ln_r_max_ft) break;
        k = cand;
    }
    return k;
}

struct FeasibilityOutcome {
    std::size_t mert_runs = 0;
    std::size_t eafts_runs = 0;
    std::size_t violations = 0;
    std::size_t fa_runs = 0;
    std::size_t fa_window_misses = 0;
    std::size_t fa_energy_regressions = 0;
    std::size_t fa_cap_hits = 0;
};

FeasibilityOutcome run_feasibility_suite() {
    FeasibilityOutcome out;
    const std::vector<double> alphas{0.0, 0.5, 1.0};
    for (std::size_t i = 0; i < 100; ++i) {
        const Instance inst = make_fft_instance(9001 + i, 5, 32);
        const std::size_t n = inst.graph.task_count();
        const std::vector<std::size_t> ells{0, n / 2, n};

        for (const double eta : default_eta_grid_non_ft()) {
            const double r_req = eta * inst.r_max_non_ft;
            const double ln_req = std::log(r_req);
            for (const double alpha : alphas)
                for (const std::size_t ell : ells) {
                    const AllocationResult res =
                        mert(inst.graph, inst.platform, r_req, MertConfig{alpha, ell});
                    absorb_diag(res.diag);
                    ++out.mert_runs;
                    if (ln_schedule_reliability(res.schedule, inst.graph,
                                                inst.platform) < ln_req - 1e-9)
                        ++out.violations;
                }

            // Frequency-allocation pipeline on the default configuration.
            const AllocationResult pipeline =
                mert(inst.graph, inst.platform, r_req, MertConfig{0.5, n / 2});
            absorb_diag(pipeline.diag);
            const double before =
                schedule_energy(pipeline.schedule, inst.graph, inst.platform);
            const FaResult scaled =
                fa(pipeline.schedule, inst.graph, inst.platform, r_req);
            ++out.fa_runs;
            if (scaled.cap_hit) ++out.fa_cap_hits;
            const double rel = std::exp(scaled.ln_reliability);
            if (!(scaled.ln_reliability >= ln_req - 1e-9 && rel < r_req + 1e-5))
                ++out.fa_window_misses;
            if (scaled.energy > before + 1e-9) ++out.fa_energy_regressions;
        }

        const long top = ft_grid_points(inst);
        for (long k = 0; k <= top; ++k) {
            const double r_req = (1.001 + k * 0.001) * inst.r_max_non_ft;
            const double ln_req = std::log(r_req);
            const AllocationResult res = eafts(inst.graph, inst.platform, r_req);
            absorb_diag(res.diag);
            ++out.eafts_runs;
            if (ln_schedule_reliability(res.schedule, inst.graph, inst.platform) <
                ln_req - 1e-9)
                ++out.violations;
            const double before =
                schedule_energy(res.schedule, inst.graph, inst.platform);
            const FaResult scaled = fa(res.schedule, inst.graph, inst.platform, r_req);
            ++out.fa_runs;
            if (scaled.cap_hit) ++out.fa_cap_hits;
            const double rel = std::exp(scaled.ln_reliability);
            if (!(scaled.ln_reliability >= ln_req - 1e-9 && rel < r_req + 1e-5))
                ++out.fa_window_misses;
            if (scaled.energy > before + 1e-9) ++out.fa_energy_regressions;
        }
    }
    return out;
}

// ---- criterion 4: timing oracle equivalence ---------------------------------

bool criterion_timing(std::string& detail) {
    std::size_t matched = 0;
    for (std::size_t i = 0; i < 200; ++i) {
        const unsigned rho = 1 + static_cast<unsigned>(i % 4);
        const std::size_t m = 4 + (i % 3) * 2;
        Instance inst;
        GeneratorConfig gen;
        gen.seed = derive_seed(4242 + i, 0);
        gen.processors = m;
        inst.graph = i % 2 ? generate_fft(rho, gen) : generate_ge(2 + rho * 2, gen);
        inst.platform =
            random_platform(m, experiment_ranges(), derive_seed(4242 + i, 1));
        const auto a = analyze_scenario(inst.graph, inst.platform, 0.5);
        const double r_req = 0.9 * std::exp(a.ln_r_max_non_ft);
        const AllocationResult res = mert(inst.graph, inst.platform, r_req,
                                          MertConfig{0.5, inst.graph.task_count() / 2});
        absorb_diag(res.diag);
        if (simulation_matches(res.schedule, inst.graph, inst.platform)) ++matched;
    }
    detail = "event-driven simulation equals the analytic times on " +
             std::to_string(matched) + "/200 schedules (bitwise)";
    return matched == 200;
}

// ---- criterion 5: brute-force oracle suite ----------------------------------

TaskGraph random_tiny_graph(std::mt19937_64& eng, std::size_t m) {
    std::uniform_int_distribution<std::size_t> n_dist(1, 5);
    std::uniform_int_distribution<int> wcet_dist(10, 100);
    std::uniform_real_distribution<double> edge_p(0.0, 1.0);
    const std::size_t n = n_dist(eng);
    RawDag raw;
    raw.processor_count = m;
    raw.wcet.resize(n);
    for (auto& row : raw.wcet) {
        row.resize(m);
        for (auto& w : row) w = wcet_dist(eng);
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (edge_p(eng) < 0.4) raw.edges.push_back({i, j, double(wcet_dist(eng))});
    return augment(raw);
}

bool criterion_oracle(std::string& detail) {
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t feasibility_mismatches = 0, energy_beats = 0, checks = 0;
    double ratio_sum = 0.0;
    std::size_t ratio_n = 0;

    for (std::uint64_t i = 0; i < 50; ++i) {
        auto eng = make_engine(derive_seed(31337, i));
        const TaskGraph g = random_tiny_graph(eng, 3);
        const Platform pf =
            random_platform(3, experiment_ranges(), derive_seed(31338, i), 0.1);
        const auto a = analyze_scenario(g, pf, 0.5);

        const double r_nonft = 0.85 * std::exp(a.ln_r_max_non_ft);
        const double r_ft = std::exp(a.ln_r_max_non_ft / 2.0);
        const double r_beyond = std::exp(a.ln_r_max_ft / 2.0);

        for (const double r_req : {r_nonft, r_ft, r_beyond}) {
            const bool heuristic_feasible =
                classify(g, pf, r_req) != ConstraintScenario::Infeasible;
            const OracleResult oracle = brute_force_oracle(g, pf, r_req);
            if (heuristic_feasible != oracle.feasible) ++feasibility_mismatches;
            if (!oracle.feasible) continue;

            const AllocationResult ft_alloc = eafts(g, pf, r_req);
            absorb_diag(ft_alloc.diag);
            const FaResult ft_scaled = fa(ft_alloc.schedule, g, pf, r_req);
            ++checks;
            if (ft_scaled.energy < oracle.energy - 1e-9) ++energy_beats;
            if (oracle.energy > 0.0) {
                ratio_sum += ft_scaled.energy / oracle.energy;
                ++ratio_n;
            }

            if (classify(g, pf, r_req) == ConstraintScenario::NonFaultTolerant) {
                const AllocationResult m_alloc =
                    mert(g, pf, r_req, MertConfig{0.5, g.task_count() / 2});
                absorb_diag(m_alloc.diag);
                const FaResult m_scaled = fa(m_alloc.schedule, g, pf, r_req);
                ++checks;
                if (m_scaled.energy < oracle.energy - 1e-9) ++energy_beats;
            }
        }
    }
    const double secs = seconds_since(t0);
    std::ostringstream os;
    os << "feasibility mismatches " << feasibility_mismatches << ", heuristic<oracle "
       << energy_beats << "/" << checks << ", mean eafts+fa/optimum "
       << (ratio_n ? ratio_sum / ratio_n : 0.0) << " (reported, not asserted), "
       << secs << " s";
    detail = os.str();
    return feasibility_mismatches == 0 && energy_beats == 0 && secs < 120.0;
}

// ---- criterion 6: directional reproduction ----------------------------------

bool criterion_directional(std::string& detail, ExperimentReport& report_out) {
    ExperimentConfig cfg;
    cfg.workload = {WorkloadSpec::Kind::Fft, 5, ""};
    cfg.processors = 32;
    cfg.instances = 30;
    cfg.seed = 60601;
    cfg.mode = SweepMode::FaultTolerant;
    cfg.resample_cap = 1000;
    const ExperimentReport report = run_sweep(cfg);
    report_out = report;

    bool ok = true;
    std::size_t eta_points = 0;
    double worst_margin = 0.0;
    for (const AggregateRow& agg : report.aggregates) {
        if (agg.algorithm != "eafts+fa") continue;
        ++eta_points;
        double rr_energy = 0.0, maxre_energy = 0.0, rr_repl = 0.0, maxre_repl = 0.0;
        for (const AggregateRow& other : report.aggregates) {
            if (other.eta != agg.eta) continue;
            if (other.algorithm == "rr+fa") {
                rr_energy = other.mean_energy;
                rr_repl = other.mean_replicas;
            } else if (other.algorithm == "maxre+fa") {
                maxre_energy = other.mean_energy;
                maxre_repl = other.mean_replicas;
            }
        }
        ok = ok && agg.mean_energy <= rr_energy + 1e-9;
        ok = ok && agg.mean_energy <= maxre_energy + 1e-9;
        ok = ok && rr_repl <= maxre_repl + 1e-12;
        worst_margin = std::max(worst_margin, agg.mean_energy - std::min(rr_energy,
                                                                         maxre_energy));
    }
    ok = ok && eta_points > 0;
    std::ostringstream os;
    os << "ft sweep: " << report.rows.size() << " rows over " << eta_points
       << " constraint points (eta_max " << report.eta_max << ", "
       << report.resample_attempts
       << " instances drawn); eafts+fa energy least at every point, rr replicas <= "
          "maxre replicas";
    detail = os.str();
    return ok;
}

// ---- criterion 7: determinism ------------------------------------------------

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool criterion_determinism(std::string& detail) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "relsched_acceptance";
    fs::create_directories(dir);

    ExperimentConfig cfg;
    cfg.workload = {WorkloadSpec::Kind::Fft, 2, ""};
    cfg.processors = 4;
    cfg.instances = 2;
    cfg.seed = 777;
    cfg.eta_grid = {0.9, 0.99, 0.999};
    cfg.algorithms = {Algorithm::Mert, Algorithm::Mr};
    cfg.mert_grids.alphas = {0.0, 0.5, 1.0};
    cfg.mert_grids.ells = {0, 8};

    const ExperimentReport r1 = run_sweep(cfg);
    write_rows_csv(r1, (dir / "r1_rows.csv").string());
    write_aggregates_csv(r1, (dir / "r1_agg.csv").string());
    const ExperimentReport r2 = run_sweep(cfg);
    write_rows_csv(r2, (dir / "r2_rows.csv").string());
    write_aggregates_csv(r2, (dir / "r2_agg.csv").string());

    const bool rows_equal =
        slurp((dir / "r1_rows.csv").string()) == slurp((dir / "r2_rows.csv").string());
    const bool agg_equal =
        slurp((dir / "r1_agg.csv").string()) == slurp((dir / "r2_agg.csv").string());
    g_lemma_violations += r1.lemma_target_violations + r1.lemma_prefix_violations +
                          r2.lemma_target_violations + r2.lemma_prefix_violations;
    fs::remove_all(dir);
    detail = std::string("two seeded sweeps: rows csv ") +
             (rows_equal ? "identical" : "DIFFER") + ", aggregates csv " +
             (agg_equal ? "identical" : "DIFFER");
    return rows_equal && agg_equal;
}

} // namespace

int main() {
    Tally tally;

    {
        std::string detail;
        const bool ok = criterion_generators(detail);
        report(tally, 1, ok, detail);
    }

    FeasibilityOutcome feas;
    {
        feas = run_feasibility_suite();
        std::ostringstream os;
        os << feas.mert_runs << " mert runs over the non-ft grid and "
           << feas.eafts_runs << " eafts runs over the ft grid, "
           << feas.violations << " constraint violations (log tolerance 1e-9)";
        report(tally, 2, feas.violations == 0, os.str());

        std::ostringstream os3;
        os3 << feas.fa_runs << " fa runs: " << feas.fa_window_misses
            << " outside [r_req, r_req+1e-5), " << feas.fa_energy_regressions
            << " energy regressions, " << feas.fa_cap_hits << " cap warnings";
        const bool ok3 = feas.fa_window_misses == 0 && feas.fa_energy_regressions == 0 &&
                         feas.fa_cap_hits * 20 <= feas.fa_runs;
        report(tally, 3, ok3, os3.str());
    }

    {
        std::string detail;
        const bool ok = criterion_timing(detail);
        report(tally, 4, ok, detail);
    }

    {
        std::string detail;
        const bool ok = criterion_oracle(detail);
        report(tally, 5, ok, detail);
    }

    ExperimentReport directional_report;
    {
        std::string detail;
        const bool ok = criterion_directional(detail, directional_report);
        report(tally, 6, ok, detail);
        g_lemma_violations += directional_report.lemma_target_violations +
                              directional_report.lemma_prefix_violations;
    }

    {
        std::string detail;
        const bool ok = criterion_determinism(detail);
        report(tally, 7, ok, detail);
    }

    {
        std::ostringstream os;
        os << g_lemma_violations
           << " lemma guardrail violations recorded across criteria 2-6";
        report(tally, 8, g_lemma_violations == 0, os.str());
    }

    std::printf("%d/%d criteria passed\n", tally.passed, tally.passed + tally.failed);
    return tally.failed == 0 ? 0 : 1;
}
