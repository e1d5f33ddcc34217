#include <catch2/catch_amalgamated.hpp>

#include <relsched/reliability_plan.hpp>
#include <relsched/task_graph.hpp>

using namespace relsched;

namespace {

TaskGraph two_task_chain() {
    // Real tasks with mean execution times 3 and 5 and a weight-10 edge.
    RawDag raw;
    raw.processor_count = 2;
    raw.wcet = {{2.0, 4.0}, {4.0, 6.0}};
    raw.edges = {{0, 1, 10.0}};
    return augment(raw);
}

Platform uniform_platform(std::size_t m, double lambda0) {
    Platform pf;
    for (std::size_t k = 0; k < m; ++k) {
        Processor p;
        p.id = k;
        p.lambda0 = lambda0;
        pf.processors.push_back(p);
    }
    return pf;
}

} // namespace

TEST_CASE("up-rank walks the critical path bottom-up") {
    const TaskGraph g = two_task_chain();
    const RankTable table = up_rank(g);
    CHECK(table.urv[g.exit_task()] == 0.0);
    CHECK(table.urv[2] == Catch::Approx(5.0).epsilon(1e-12));
    CHECK(table.urv[1] == Catch::Approx(18.0).epsilon(1e-12));
    // Zero-weight entry edges make the entry rank tie with its best child;
    // the id tie-break keeps it first.
    CHECK(table.urv[g.entry()] == Catch::Approx(18.0).epsilon(1e-12));
    CHECK(table.order.front() == g.entry());
    CHECK(table.order.back() == g.exit_task());
}

TEST_CASE("the rank order is a topological order") {
    GeneratorConfig cfg;
    cfg.processors = 3;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        cfg.seed = seed;
        const TaskGraph g = seed % 2 ? generate_fft(3, cfg) : generate_ge(5, cfg);
        const RankTable table = up_rank(g);
        std::vector<std::size_t> pos(g.task_count());
        for (std::size_t i = 0; i < table.order.size(); ++i) pos[table.order[i]] = i;
        for (const Edge& e : g.edges()) REQUIRE(pos[e.from] < pos[e.to]);
    }
}

TEST_CASE("adding a processor at the per-task mean leaves ranks unchanged") {
    const TaskGraph g = two_task_chain();
    RawDag raw;
    raw.processor_count = 3;
    raw.wcet = {{2.0, 4.0, 3.0}, {4.0, 6.0, 5.0}};
    raw.edges = {{0, 1, 10.0}};
    const TaskGraph wider = augment(raw);
    const RankTable a = up_rank(g);
    const RankTable b = up_rank(wider);
    for (TaskId t = 0; t < g.task_count(); ++t)
        CHECK(a.urv[t] == Catch::Approx(b.urv[t]).epsilon(1e-12));
}

TEST_CASE("wait times combine the worst input edge with the mean execution") {
    RawDag raw;
    raw.processor_count = 2;
    raw.wcet = {{1.0, 1.0}, {2.0, 2.0}, {6.0, 6.0}};
    raw.edges = {{0, 2, 4.0}, {1, 2, 9.0}};
    const TaskGraph g = augment(raw);
    const std::vector<double> w = wait_times(g);
    CHECK(w[g.entry()] == 0.0);
    CHECK(w[3] == Catch::Approx(15.0).epsilon(1e-12)); // max(4,9) + 6
    CHECK(w[1] == Catch::Approx(1.0).epsilon(1e-12));  // zero-weight entry edge
}

TEST_CASE("bounds collapse to the per-task maxima when the constraint is tight") {
    const TaskGraph g = two_task_chain();
    const Platform pf = uniform_platform(2, 1e-3);
    const auto a = analyze_scenario(g, pf, 0.5);
    const double r_max = std::exp(a.ln_r_max_non_ft);
    ReliabilityPlan plan(g, pf, r_max, ConstraintScenario::NonFaultTolerant);
    for (TaskId t = 0; t < g.task_count(); ++t)
        CHECK(plan.ln_bound(t) == Catch::Approx(plan.ln_r_max(t)).margin(1e-12));
}

TEST_CASE("identical per-task maxima yield the uniform bound") {
    RawDag raw;
    raw.processor_count = 2;
    raw.wcet = {{5.0, 5.0}, {5.0, 5.0}, {5.0, 5.0}};
    const TaskGraph g = augment(raw);
    const Platform pf = uniform_platform(2, 1e-3);
    ReliabilityPlan plan(g, pf, 0.9, ConstraintScenario::NonFaultTolerant);
    const double expected = std::log(0.9) / 3.0; // three identical real tasks
    for (TaskId t = 1; t + 1 < g.task_count(); ++t)
        CHECK(plan.ln_bound(t) == Catch::Approx(expected).epsilon(1e-12));
    CHECK(plan.ln_bound(g.entry()) == 0.0);
    CHECK(plan.ln_bound(g.exit_task()) == 0.0);
}

TEST_CASE("bound products equal the constraint on random instances") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        GeneratorConfig cfg;
        cfg.processors = 4;
        cfg.seed = seed;
        const TaskGraph g = seed % 2 ? generate_fft(2, cfg) : generate_ge(4, cfg);
        const Platform pf = random_platform(4, ParameterRanges{}, seed ^ 0x5eed);
        const auto a = analyze_scenario(g, pf, 0.5);

        const double r_nonft = 0.93 * std::exp(a.ln_r_max_non_ft);
        ReliabilityPlan nonft(g, pf, r_nonft, ConstraintScenario::NonFaultTolerant);
        CHECK(nonft.ln_bound_product() ==
              Catch::Approx(std::log(r_nonft)).margin(1e-9));

        // Midway between the single-replica maximum and one: always inside
        // the fault-tolerant band for these platforms.
        const double r_ft = std::exp(a.ln_r_max_non_ft / 2.0);
        if (std::log(r_ft) <= a.ln_r_max_ft) {
            ReliabilityPlan ft(g, pf, r_ft, ConstraintScenario::FaultTolerant);
            CHECK(ft.ln_bound_product() ==
                  Catch::Approx(std::log(r_ft)).margin(1e-9));
        }
    }
}

TEST_CASE("the fault-tolerant setting falls back to uniform bounds") {
    GeneratorConfig cfg;
    cfg.processors = 32;
    cfg.seed = 3;
    const TaskGraph g = generate_ge(4, cfg);
    const Platform pf = random_platform(32, ParameterRanges{}, 3);
    const auto a = analyze_scenario(g, pf, 0.5);
    const double r_ft = std::exp(a.ln_r_max_non_ft / 2.0);
    REQUIRE(std::log(r_ft) <= a.ln_r_max_ft);
    REQUIRE(classify(g, pf, r_ft) == ConstraintScenario::FaultTolerant);
    ReliabilityPlan plan(g, pf, r_ft, ConstraintScenario::FaultTolerant);
    CHECK(plan.uniform_fallback());
    const double share = std::log(r_ft) / static_cast<double>(g.task_count());
    for (TaskId t = 0; t < g.task_count(); ++t)
        CHECK(plan.ln_bound(t) == Catch::Approx(share).epsilon(1e-12));
}

TEST_CASE("targets start at the bound and fall after overshoot") {
    const TaskGraph g = two_task_chain();
    const Platform pf = uniform_platform(2, 1e-3);
    ReliabilityPlan plan(g, pf, 0.97, ConstraintScenario::NonFaultTolerant);

    const RankTable table = up_rank(g);
    const TaskId first = table.order.front();
    const double t1 = plan.next_target_ln(first);
    CHECK(t1 == plan.ln_bound(first)); // base case: target equals bound

    // Achieving exactly the bound keeps later targets at their bounds.
    plan.record_achieved(plan.ln_bound(first));
    const TaskId second = table.order[1];
    const double t2 = plan.next_target_ln(second);
    CHECK(t2 == Catch::Approx(plan.ln_bound(second)).margin(1e-12));

    // Overshooting lowers the following target below its bound.
    plan.record_achieved(plan.ln_bound(second) / 2.0);
    const TaskId third = table.order[2];
    const double t3 = plan.next_target_ln(third);
    CHECK(t3 < plan.ln_bound(third));
    plan.record_achieved(0.0);

    CHECK(plan.target_above_bound() == 0);
    CHECK(plan.prefix_below_bound() == 0);
}

TEST_CASE("meeting every bound meets the whole constraint") {
    // Give every task its most reliable processor: per-task reliability is
    // then the per-task maximum, which dominates the bound.
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        GeneratorConfig cfg;
        cfg.processors = 3;
        cfg.seed = seed;
        const TaskGraph g = generate_ge(4, cfg);
        const Platform pf = random_platform(3, ParameterRanges{}, seed + 100);
        const auto a = analyze_scenario(g, pf, 0.5);
        const double r_req = 0.9 * std::exp(a.ln_r_max_non_ft);
        ReliabilityPlan plan(g, pf, r_req, ConstraintScenario::NonFaultTolerant);

        double total = 0.0;
        for (TaskId t = 0; t < g.task_count(); ++t) {
            CHECK(plan.ln_r_max(t) >= plan.ln_bound(t) - 1e-15);
            total += plan.ln_r_max(t);
        }
        CHECK(total >= std::log(r_req) - 1e-9);
    }
}

TEST_CASE("infeasible constraints are rejected") {
    const TaskGraph g = two_task_chain();
    const Platform pf = uniform_platform(2, 1e-3);
    CHECK_THROWS_AS(ReliabilityPlan(g, pf, 0.9999, ConstraintScenario::NonFaultTolerant),
                    std::invalid_argument);
    CHECK_THROWS_AS(ReliabilityPlan(g, pf, 0.5, ConstraintScenario::Infeasible),
                    std::invalid_argument);
}
