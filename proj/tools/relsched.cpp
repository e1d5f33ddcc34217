// Command-line front end: workflow/platform generation, single-instance
// scheduling, the full sweep protocol, the brute-force oracle, and schedule
// validation.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <relsched/experiment.hpp>

namespace {

using namespace relsched;

struct WorkloadArgs {
    std::string fft;  // rho
    std::string ge;   // rho
    std::string file; // path
};

void add_workload_flags(CLI::App* app, WorkloadArgs& args) {
    auto* fft = app->add_option("--fft", args.fft, "FFT workflow with the given rho");
    auto* ge = app->add_option("--ge", args.ge, "Gaussian-elimination workflow with the given rho");
    auto* file = app->add_option("--workflow", args.file, "workflow file (json)");
    fft->excludes(ge)->excludes(file);
    ge->excludes(file);
}

WorkloadSpec parse_workload(const WorkloadArgs& args) {
    WorkloadSpec spec;
    if (!args.fft.empty()) {
        spec.kind = WorkloadSpec::Kind::Fft;
        spec.rho = static_cast<unsigned>(std::stoul(args.fft));
    } else if (!args.ge.empty()) {
        spec.kind = WorkloadSpec::Kind::Ge;
        spec.rho = static_cast<unsigned>(std::stoul(args.ge));
    } else if (!args.file.empty()) {
        spec.kind = WorkloadSpec::Kind::File;
        spec.path = args.file;
    } else {
        throw CLI::ValidationError("workload", "one of --fft, --ge, --workflow is required");
    }
    return spec;
}

TaskGraph build_graph(const WorkloadSpec& spec, std::size_t processors, double ccr,
                      std::uint64_t seed) {
    GeneratorConfig gen;
    gen.seed = seed;
    gen.processors = processors;
    gen.ccr = ccr;
    switch (spec.kind) {
        case WorkloadSpec::Kind::Fft: return generate_fft(spec.rho, gen);
        case WorkloadSpec::Kind::Ge: return generate_ge(spec.rho, gen);
        default: return io::load_workflow(spec.path);
    }
}

int cmd_generate(const WorkloadArgs& wargs, std::size_t processors, double ccr,
                 std::uint64_t seed, double freq_step, const std::string& out_workflow,
                 const std::string& out_platform, const std::string& out_dot) {
    const WorkloadSpec spec = parse_workload(wargs);
    const TaskGraph g = build_graph(spec, processors, ccr, derive_seed(seed, 0));
    if (!out_workflow.empty()) {
        io::save_workflow(g, out_workflow);
        std::cout << "workflow: " << out_workflow << " (" << g.real_task_count()
                  << " real tasks, " << g.task_count() << " with entry/exit)\n";
    }
    if (!out_dot.empty()) {
        io::save_workflow_dot(g, out_dot);
        std::cout << "graph description: " << out_dot << "\n";
    }
    if (!out_platform.empty()) {
        const Platform pf = random_platform(g.processor_count(), experiment_ranges(),
                                            derive_seed(seed, 1), freq_step);
        io::save_platform(pf, out_platform);
        std::cout << "platform: " << out_platform << " (" << pf.size()
                  << " processors)\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"DAG workflow scheduling under reliability constraints on "
                 "DVFS-capable heterogeneous multiprocessors"};
    app.require_subcommand(1);

    // ---- generate ----
    auto* gen = app.add_subcommand("generate", "emit workflow and platform files");
    WorkloadArgs gen_workload;
    add_workload_flags(gen, gen_workload);
    std::size_t gen_procs = 32;
    double gen_ccr = 1.0, gen_step = 0.0001;
    std::uint64_t gen_seed = 1;
    std::string gen_out_wf, gen_out_pf, gen_out_dot;
    gen->add_option("--procs", gen_procs, "processor count");
    gen->add_option("--ccr", gen_ccr, "communication-to-computation ratio");
    gen->add_option("--seed", gen_seed, "master seed");
    gen->add_option("--freq-step", gen_step, "frequency grid step");
    gen->add_option("--out-workflow", gen_out_wf, "workflow json output path");
    gen->add_option("--out-platform", gen_out_pf, "platform json output path");
    gen->add_option("--out-dot", gen_out_dot, "graph-description output path");

    // ---- schedule ----
    auto* sch = app.add_subcommand("schedule", "schedule one instance with one algorithm");
    WorkloadArgs sch_workload;
    add_workload_flags(sch, sch_workload);
    std::string sch_platform, sch_algo = "mert", sch_out;
    std::size_t sch_procs = 32;
    double sch_ccr = 1.0, sch_step = 0.0001;
    std::uint64_t sch_seed = 1;
    double sch_eta = -1.0, sch_rreq = -1.0;
    double sch_alpha = 0.5;
    long sch_ell = -1;
    double sch_zeta = 1e-5;
    std::size_t sch_max_fa = 0;
    bool sch_no_fa = false;
    std::string sch_trace;
    sch->add_option("--platform", sch_platform, "platform json (generated when absent)");
    sch->add_option("--procs", sch_procs, "processor count for generated platforms");
    sch->add_option("--ccr", sch_ccr, "communication-to-computation ratio");
    sch->add_option("--freq-step", sch_step, "frequency grid step");
    sch->add_option("--seed", sch_seed, "master seed");
    sch->add_option("--algo", sch_algo, "mert|eafts|mr|maxre|rr")
        ->check(CLI::IsMember({"mert", "eafts", "mr", "maxre", "rr"}));
    sch->add_option("--eta", sch_eta, "constraint as a fraction of the best "
                                      "single-replica reliability");
    sch->add_option("--r-req", sch_rreq, "absolute reliability constraint");
    sch->add_option("--alpha", sch_alpha, "mert finish/execution blend weight");
    sch->add_option("--ell", sch_ell, "mert wait-time cutoff (default: n/2)");
    sch->add_option("--zeta", sch_zeta, "frequency allocation accuracy");
    sch->add_option("--max-fa-iters", sch_max_fa, "frequency allocation iteration cap");
    sch->add_flag("--no-fa", sch_no_fa, "skip frequency allocation");
    sch->add_option("--fa-trace", sch_trace, "write the fa iteration trace csv here");
    std::string sch_out_path = "schedule.json";
    sch->add_option("--out", sch_out_path, "schedule output path");

    // ---- sweep ----
    auto* sw = app.add_subcommand("sweep", "run the full experiment protocol");
    WorkloadArgs sw_workload;
    add_workload_flags(sw, sw_workload);
    std::string sw_mode = "nonft";
    std::size_t sw_procs = 32, sw_instances = 30, sw_jobs = 1, sw_resample = 1000;
    double sw_ccr = 1.0, sw_step = 0.0001, sw_zeta = 1e-5;
    std::uint64_t sw_seed = 1;
    std::vector<std::string> sw_algos;
    std::vector<double> sw_alpha_grid;
    std::vector<std::size_t> sw_ell_grid;
    std::vector<double> sw_eta_grid;
    std::size_t sw_max_fa = 0;
    std::string sw_out = "sweep";
    sw->add_option("--mode", sw_mode, "nonft|ft")->check(CLI::IsMember({"nonft", "ft"}));
    sw->add_option("--procs", sw_procs, "processor count");
    sw->add_option("--instances", sw_instances, "instances per constraint");
    sw->add_option("--jobs", sw_jobs, "worker threads over instances");
    sw->add_option("--ccr", sw_ccr, "communication-to-computation ratio");
    sw->add_option("--freq-step", sw_step, "frequency grid step");
    sw->add_option("--seed", sw_seed, "master seed for all randomness");
    sw->add_option("--zeta", sw_zeta, "frequency allocation accuracy");
    sw->add_option("--max-fa-iters", sw_max_fa, "frequency allocation iteration cap");
    sw->add_option("--algo", sw_algos, "algorithms to run (repeatable)");
    sw->add_option("--alpha-grid", sw_alpha_grid, "mert alpha sweep values");
    sw->add_option("--ell-grid", sw_ell_grid, "mert ell sweep values");
    sw->add_option("--eta-grid", sw_eta_grid, "non-ft constraint grid override");
    sw->add_option("--resample-cap", sw_resample, "ft instance redraw budget");
    sw->add_option("--out", sw_out, "output prefix for <out>_rows.csv, "
                                    "<out>_aggregates.csv, <out>_timing.csv");

    // ---- oracle ----
    auto* ora = app.add_subcommand("oracle", "brute-force minimum-energy check "
                                             "for tiny instances");
    std::string ora_workflow, ora_platform;
    double ora_rreq = 0.9;
    std::size_t ora_max_tasks = 6, ora_max_procs = 3;
    ora->add_option("--workflow", ora_workflow, "workflow json")->required();
    ora->add_option("--platform", ora_platform, "platform json")->required();
    ora->add_option("--r-req", ora_rreq, "reliability constraint")->required();
    ora->add_option("--max-tasks", ora_max_tasks, "task limit guard");
    ora->add_option("--max-procs", ora_max_procs, "processor limit guard");

    // ---- validate ----
    auto* val = app.add_subcommand("validate", "re-check a schedule file");
    std::string val_workflow, val_platform, val_schedule;
    val->add_option("--workflow", val_workflow, "workflow json")->required();
    val->add_option("--platform", val_platform, "platform json")->required();
    val->add_option("--schedule", val_schedule, "schedule json")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            return cmd_generate(gen_workload, gen_procs, gen_ccr, gen_seed, gen_step,
                                gen_out_wf, gen_out_pf, gen_out_dot);
        }

        if (sch->parsed()) {
            const WorkloadSpec spec = parse_workload(sch_workload);
            const TaskGraph g = build_graph(spec, sch_procs, sch_ccr,
                                            derive_seed(sch_seed, 0));
            const Platform pf =
                sch_platform.empty()
                    ? random_platform(g.processor_count(), experiment_ranges(),
                                      derive_seed(sch_seed, 1), sch_step)
                    : io::load_platform(sch_platform);
            const auto analysis = analyze_scenario(g, pf, 0.5);
            double r_req = sch_rreq;
            if (r_req < 0.0)
                r_req = (sch_eta < 0.0 ? 0.95 : sch_eta) * std::exp(analysis.ln_r_max_non_ft);
            std::cout << "scenario: " << to_string(classify(g, pf, r_req))
                      << ", r_req = " << r_req << "\n";

            AllocationResult alloc;
            const Algorithm algo = parse_algorithm(sch_algo);
            switch (algo) {
                case Algorithm::Mert: {
                    MertConfig cfg{sch_alpha, sch_ell < 0
                                                  ? (g.task_count() + 1) / 2
                                                  : static_cast<std::size_t>(sch_ell)};
                    alloc = mert(g, pf, r_req, cfg);
                    break;
                }
                case Algorithm::Eafts: alloc = eafts(g, pf, r_req); break;
                case Algorithm::Mr: alloc = mr(g, pf); break;
                case Algorithm::MaxRe: alloc = maxre(g, pf, r_req); break;
                case Algorithm::Rr: alloc = rr(g, pf, r_req); break;
            }

            Schedule final_schedule = alloc.schedule;
            if (!sch_no_fa) {
                FaOptions fa_opts;
                fa_opts.zeta = sch_zeta;
                fa_opts.max_iterations = sch_max_fa;
                fa_opts.record_trace = !sch_trace.empty();
                FaResult scaled = fa(alloc.schedule, g, pf, r_req, fa_opts);
                final_schedule = scaled.schedule;
                std::cout << "fa: " << scaled.iterations << " iterations"
                          << (scaled.converged ? "" : " (no convergence)")
                          << (scaled.early_stop ? ", stopped on energy" : "")
                          << (scaled.cap_hit ? ", iteration cap hit" : "") << "\n";
                if (!sch_trace.empty()) {
                    std::ofstream tr(sch_trace);
                    tr << "# schema: relsched-fa-trace v1\n";
                    tr << "task,processor,f_before,f_boundary,f_after,energy,"
                          "reliability\n";
                    for (const FaTraceStep& st : scaled.trace)
                        tr << st.task << ',' << st.processor << ',' << st.f_before
                           << ',' << st.f_boundary << ',' << st.f_after << ','
                           << st.energy_total << ',' << st.reliability << '\n';
                }
            }
            validate_schedule(final_schedule, g, pf);
            io::save_schedule(final_schedule, g, pf, sch_out_path);
            std::cout << "makespan:    " << makespan(final_schedule) << "\n"
                      << "energy:      " << schedule_energy(final_schedule, g, pf) << "\n"
                      << "reliability: " << schedule_reliability(final_schedule, g, pf)
                      << "\n"
                      << "schedule: " << sch_out_path << "\n";
            return 0;
        }

        if (sw->parsed()) {
            ExperimentConfig cfg;
            cfg.workload = parse_workload(sw_workload);
            cfg.processors = sw_procs;
            cfg.instances = sw_instances;
            cfg.jobs = sw_jobs;
            cfg.ccr = sw_ccr;
            cfg.frequency_step = sw_step;
            cfg.seed = sw_seed;
            cfg.fa_options.zeta = sw_zeta;
            cfg.fa_options.max_iterations = sw_max_fa;
            cfg.mode = sw_mode == "ft" ? SweepMode::FaultTolerant
                                       : SweepMode::NonFaultTolerant;
            cfg.eta_grid = sw_eta_grid;
            cfg.resample_cap = sw_resample;
            if (!sw_alpha_grid.empty()) cfg.mert_grids.alphas = sw_alpha_grid;
            cfg.mert_grids.ells = sw_ell_grid;
            for (const std::string& a : sw_algos)
                cfg.algorithms.push_back(parse_algorithm(a));

            const ExperimentReport report = run_sweep(cfg);
            write_rows_csv(report, sw_out + "_rows.csv");
            write_aggregates_csv(report, sw_out + "_aggregates.csv");
            write_timing_csv(report, sw_out + "_timing.csv");
            std::cout << "rows: " << report.rows.size() << "\n";
            if (cfg.mode == SweepMode::FaultTolerant)
                std::cout << "eta_max: " << report.eta_max
                          << " (instances drawn: " << report.resample_attempts << ")\n";
            std::cout << "fa runs: " << report.fa_runs
                      << ", cap hits: " << report.fa_cap_hits
                      << ", early stops: " << report.fa_early_stops << "\n";
            if (report.constraint_violations > 0)
                std::cout << "WARNING: " << report.constraint_violations
                          << " rows violate their constraint\n";
            std::cout << "wrote " << sw_out << "_rows.csv, " << sw_out
                      << "_aggregates.csv, " << sw_out << "_timing.csv\n";
            return 0;
        }

        if (ora->parsed()) {
            const TaskGraph g = io::load_workflow(ora_workflow);
            const Platform pf = io::load_platform(ora_platform);
            OracleLimits limits;
            limits.max_real_tasks = ora_max_tasks;
            limits.max_processors = ora_max_procs;
            const OracleResult res = brute_force_oracle(g, pf, ora_rreq, limits);
            if (res.feasible)
                std::cout << "feasible, optimal energy " << res.energy
                          << " at reliability " << std::exp(res.ln_reliability) << "\n";
            else
                std::cout << "infeasible\n";
            return 0;
        }

        if (val->parsed()) {
            const TaskGraph g = io::load_workflow(val_workflow);
            const Platform pf = io::load_platform(val_platform);
            const io::LoadedSchedule loaded = io::load_schedule(val_schedule, g, pf);
            validate_schedule(loaded.schedule, g, pf);
            const Schedule rebuilt = rederive_times(g, loaded.schedule);
            for (std::size_t i = 0; i < loaded.schedule.placement_order().size(); ++i) {
                const Replica& a = loaded.schedule.replica(loaded.schedule.placement_order()[i]);
                const Replica& b = rebuilt.replica(rebuilt.placement_order()[i]);
                if (a.start != b.start || a.finish != b.finish)
                    throw std::runtime_error("stored times disagree with the timing "
                                             "recursion for task v" +
                                             std::to_string(a.task));
            }
            if (!simulation_matches(loaded.schedule, g, pf))
                throw std::runtime_error("stored times disagree with the event-driven "
                                         "simulation");
            auto close = [](double a, double b) {
                return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
            };
            if (!close(loaded.makespan, makespan(loaded.schedule)) ||
                !close(loaded.energy, schedule_energy(loaded.schedule, g, pf)) ||
                !close(loaded.reliability, schedule_reliability(loaded.schedule, g, pf)))
                throw std::runtime_error("summary block disagrees with recomputed metrics");
            std::cout << "schedule is valid: makespan " << loaded.makespan << ", energy "
                      << loaded.energy << ", reliability " << loaded.reliability << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
