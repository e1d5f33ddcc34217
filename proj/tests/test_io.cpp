#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <relsched/io.hpp>
#include <relsched/schedulers.hpp>

using namespace relsched;

namespace {

struct TempDir {
    std::filesystem::path dir;
    TempDir() {
        dir = std::filesystem::temp_directory_path() /
              ("relsched_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(dir);
    }
    ~TempDir() { std::filesystem::remove_all(dir); }
    std::string path(const std::string& name) const { return (dir / name).string(); }
};

void check_graphs_equal(const TaskGraph& a, const TaskGraph& b) {
    REQUIRE(a.task_count() == b.task_count());
    REQUIRE(a.processor_count() == b.processor_count());
    for (TaskId t = 0; t < a.task_count(); ++t) REQUIRE(a.wcet_row(t) == b.wcet_row(t));
    REQUIRE(a.edges().size() == b.edges().size());
    for (std::size_t i = 0; i < a.edges().size(); ++i) {
        REQUIRE(a.edges()[i].from == b.edges()[i].from);
        REQUIRE(a.edges()[i].to == b.edges()[i].to);
        REQUIRE(a.edges()[i].weight == b.edges()[i].weight);
    }
}

} // namespace

TEST_CASE("workflow json round-trips exactly") {
    TempDir tmp;
    GeneratorConfig cfg;
    cfg.processors = 3;
    cfg.seed = 4;
    cfg.ccr = 0.7; // non-integer weights exercise the float formatting
    const TaskGraph g = generate_fft(2, cfg);
    io::save_workflow(g, tmp.path("wf.json"));
    const TaskGraph back = io::load_workflow(tmp.path("wf.json"));
    check_graphs_equal(g, back);
}

TEST_CASE("workflow graph-description round-trips exactly") {
    TempDir tmp;
    GeneratorConfig cfg;
    cfg.processors = 2;
    cfg.seed = 8;
    const TaskGraph g = generate_ge(4, cfg);
    io::save_workflow_dot(g, tmp.path("wf.dot"));
    const TaskGraph back = io::load_workflow(tmp.path("wf.dot"), io::WorkflowFormat::Dot);
    check_graphs_equal(g, back);
}

TEST_CASE("loading a cyclic workflow names the cycle") {
    TempDir tmp;
    std::ofstream out(tmp.path("cycle.json"));
    out << R"({"schema":1,"kind":"workflow","processors":1,
               "wcet":[[1.0],[2.0]],
               "edges":[[0,1,1.0],[1,0,1.0]]})";
    out.close();
    try {
        io::load_workflow(tmp.path("cycle.json"));
        FAIL("expected a cycle error");
    } catch (const CycleError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("v0") != std::string::npos);
        CHECK(msg.find("v1") != std::string::npos);
    }
}

TEST_CASE("loading a workflow with a bad wcet arity names the rule") {
    TempDir tmp;
    std::ofstream out(tmp.path("arity.json"));
    out << R"({"schema":1,"kind":"workflow","processors":2,
               "wcet":[[1.0,2.0],[3.0]],"edges":[[0,1,1.0]]})";
    out.close();
    CHECK_THROWS_WITH(io::load_workflow(tmp.path("arity.json")),
                      Catch::Matchers::ContainsSubstring("arity"));
}

TEST_CASE("parse failures carry the position") {
    TempDir tmp;
    std::ofstream out(tmp.path("broken.json"));
    out << "{ not json";
    out.close();
    try {
        io::load_workflow(tmp.path("broken.json"));
        FAIL("expected a parse error");
    } catch (const io::ParseError& e) {
        CHECK(std::string(e.what()).find("broken.json") != std::string::npos);
    }

    std::ofstream dot(tmp.path("broken.dot"));
    dot << "digraph workflow {\n  what is this\n}\n";
    dot.close();
    try {
        io::load_workflow(tmp.path("broken.dot"), io::WorkflowFormat::Dot);
        FAIL("expected a parse error");
    } catch (const io::ParseError& e) {
        CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
}

TEST_CASE("platform json round-trips exactly") {
    TempDir tmp;
    const Platform pf = random_platform(5, ParameterRanges{}, 123, 0.001);
    io::save_platform(pf, tmp.path("pf.json"));
    const Platform back = io::load_platform(tmp.path("pf.json"));
    REQUIRE(back.size() == pf.size());
    CHECK(back.frequency_step == pf.frequency_step);
    for (std::size_t k = 0; k < pf.size(); ++k) {
        CHECK(back.proc(k).f_min == pf.proc(k).f_min);
        CHECK(back.proc(k).p_static == pf.proc(k).p_static);
        CHECK(back.proc(k).c == pf.proc(k).c);
        CHECK(back.proc(k).alpha == pf.proc(k).alpha);
        CHECK(back.proc(k).lambda0 == pf.proc(k).lambda0);
        CHECK(back.proc(k).d == pf.proc(k).d);
    }
}

TEST_CASE("schedules round-trip with their times") {
    TempDir tmp;
    GeneratorConfig cfg;
    cfg.processors = 3;
    cfg.seed = 6;
    const TaskGraph g = generate_ge(4, cfg);
    const Platform pf = random_platform(3, ParameterRanges{}, 6);
    const auto a = analyze_scenario(g, pf, 0.5);
    const AllocationResult alloc =
        mert(g, pf, 0.9 * std::exp(a.ln_r_max_non_ft), MertConfig{0.5, 3});

    io::save_schedule(alloc.schedule, g, pf, tmp.path("sched.json"));
    const io::LoadedSchedule loaded = io::load_schedule(tmp.path("sched.json"), g, pf);
    validate_schedule(loaded.schedule, g, pf);
    REQUIRE(loaded.schedule.placement_order().size() ==
            alloc.schedule.placement_order().size());
    for (std::size_t i = 0; i < loaded.schedule.placement_order().size(); ++i) {
        const Replica& x = alloc.schedule.replica(alloc.schedule.placement_order()[i]);
        const Replica& y = loaded.schedule.replica(loaded.schedule.placement_order()[i]);
        CHECK(x.task == y.task);
        CHECK(x.processor == y.processor);
        CHECK(x.frequency == y.frequency);
        CHECK(x.start == y.start);
        CHECK(x.finish == y.finish);
    }
    CHECK(loaded.makespan == makespan(alloc.schedule));
}
