#pragma once

#include <charconv>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include <relsched/platform.hpp>
#include <relsched/schedule.hpp>
#include <relsched/task_graph.hpp>

namespace relsched::io {

inline constexpr int schema_version = 1;

class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline nlohmann::json parse_file(const std::string& path, const char* kind) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open file");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    if (j.value("schema", -1) != schema_version)
        throw ParseError(path + ": missing or unsupported schema version");
    if (j.value("kind", "") != kind)
        throw ParseError(path + ": expected kind \"" + kind + "\"");
    return j;
}

inline void write_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open file for writing");
    out << j.dump(2) << '\n';
}

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("failed to format double");
    return std::string(buf, ptr);
}

} // namespace detail

// ---- workflow -------------------------------------------------------------

inline nlohmann::json to_json(const TaskGraph& g) {
    nlohmann::json j;
    j["schema"] = schema_version;
    j["kind"] = "workflow";
    j["processors"] = g.processor_count();
    j["tasks"] = g.task_count();
    nlohmann::json wcet = nlohmann::json::array();
    for (TaskId t = 0; t < g.task_count(); ++t) wcet.push_back(g.wcet_row(t));
    j["wcet"] = std::move(wcet);
    nlohmann::json edges = nlohmann::json::array();
    for (const Edge& e : g.edges())
        edges.push_back(nlohmann::json::array({e.from, e.to, e.weight}));
    j["edges"] = std::move(edges);
    return j;
}

inline void save_workflow(const TaskGraph& g, const std::string& path) {
    detail::write_file(path, to_json(g));
}

/// Loads a workflow file and augments it if needed. Invariant violations
/// (cycles, bad arity, non-positive execution times) surface as exceptions
/// naming the offending rule.
inline TaskGraph load_workflow(const std::string& path) {
    const nlohmann::json j = detail::parse_file(path, "workflow");
    RawDag raw;
    try {
        raw.processor_count = j.at("processors").get<std::size_t>();
        raw.wcet = j.at("wcet").get<std::vector<std::vector<double>>>();
        for (const auto& e : j.at("edges")) {
            raw.edges.push_back({e.at(0).get<TaskId>(), e.at(1).get<TaskId>(),
                                 e.at(2).get<double>()});
        }
        if (j.contains("tasks") && j.at("tasks").get<std::size_t>() != raw.wcet.size())
            throw ParseError(path + ": task count does not match wcet rows");
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return augment(raw);
}

// ---- workflow, graph-description dialect ----------------------------------

inline void save_workflow_dot(const TaskGraph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open file for writing");
    out << "digraph workflow {\n";
    out << "  graph [processors=" << g.processor_count() << "];\n";
    for (TaskId t = 0; t < g.task_count(); ++t) {
        out << "  v" << t << " [wcet=\"";
        const auto& row = g.wcet_row(t);
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (k) out << ',';
            out << detail::format_double(row[k]);
        }
        out << "\"];\n";
    }
    for (const Edge& e : g.edges())
        out << "  v" << e.from << " -> v" << e.to
            << " [weight=" << detail::format_double(e.weight) << "];\n";
    out << "}\n";
}

/// Parses the graph-description dialect written by save_workflow_dot.
/// Strict line-oriented grammar; errors report line numbers.
inline TaskGraph load_workflow_dot(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open file");

    auto fail = [&path](std::size_t line, const std::string& why) -> ParseError {
        return ParseError(path + ":" + std::to_string(line) + ": " + why);
    };

    RawDag raw;
    std::map<TaskId, std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    bool in_graph = false, closed = false;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = line;
        // trim
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = s.find_last_not_of(" \t\r");
        s = s.substr(b, e - b + 1);
        if (s.empty()) continue;
        if (!in_graph) {
            if (s != "digraph workflow {") throw fail(lineno, "expected 'digraph workflow {'");
            in_graph = true;
            continue;
        }
        if (s == "}") {
            closed = true;
            continue;
        }
        if (closed) throw fail(lineno, "content after closing brace");
        std::smatch m;
        static const std::regex proc_re(R"re(graph \[processors=(\d+)\];)re");
        static const std::regex node_re(R"re(v(\d+) \[wcet="([^"]*)"\];)re");
        static const std::regex edge_re(R"re(v(\d+) -> v(\d+) \[weight=([^\]]+)\];)re");
        if (std::regex_match(s, m, proc_re)) {
            raw.processor_count = std::stoul(m[1]);
        } else if (std::regex_match(s, m, node_re)) {
            std::vector<double> row;
            std::stringstream ss(m[2]);
            std::string cell;
            while (std::getline(ss, cell, ',')) {
                try {
                    row.push_back(std::stod(cell));
                } catch (const std::exception&) {
                    throw fail(lineno, "bad wcet value '" + cell + "'");
                }
            }
            rows[std::stoul(m[1])] = std::move(row);
        } else if (std::regex_match(s, m, edge_re)) {
            try {
                raw.edges.push_back({std::stoul(m[1]), std::stoul(m[2]), std::stod(m[3])});
            } catch (const std::exception&) {
                throw fail(lineno, "bad edge weight");
            }
        } else {
            throw fail(lineno, "unrecognized statement '" + s + "'");
        }
    }
    if (!in_graph || !closed) throw fail(lineno, "unterminated graph");
    if (raw.processor_count == 0) throw fail(lineno, "missing graph [processors=...]");
    raw.wcet.resize(rows.size());
    for (const auto& [t, row] : rows) {
        if (t >= rows.size()) throw fail(lineno, "task ids must be contiguous from v0");
        raw.wcet[t] = row;
    }
    return augment(raw);
}

enum class WorkflowFormat { Json, Dot };

inline TaskGraph load_workflow(const std::string& path, WorkflowFormat fmt) {
    return fmt == WorkflowFormat::Json ? load_workflow(path) : load_workflow_dot(path);
}

// ---- platform ---------------------------------------------------------------

inline nlohmann::json to_json(const Platform& pf) {
    nlohmann::json j;
    j["schema"] = schema_version;
    j["kind"] = "platform";
    j["frequency_step"] = pf.frequency_step;
    nlohmann::json procs = nlohmann::json::array();
    for (const Processor& p : pf.processors) {
        procs.push_back({{"f_min", p.f_min},
                         {"p_static", p.p_static},
                         {"c", p.c},
                         {"alpha", p.alpha},
                         {"lambda0", p.lambda0},
                         {"d", p.d}});
    }
    j["processors"] = std::move(procs);
    return j;
}

inline void save_platform(const Platform& pf, const std::string& path) {
    detail::write_file(path, to_json(pf));
}

inline Platform load_platform(const std::string& path) {
    const nlohmann::json j = detail::parse_file(path, "platform");
    Platform pf;
    try {
        pf.frequency_step = j.at("frequency_step").get<double>();
        std::size_t id = 0;
        for (const auto& pj : j.at("processors")) {
            Processor p;
            p.id = id++;
            p.f_min = pj.at("f_min").get<double>();
            p.p_static = pj.at("p_static").get<double>();
            p.c = pj.at("c").get<double>();
            p.alpha = pj.at("alpha").get<double>();
            p.lambda0 = pj.at("lambda0").get<double>();
            p.d = pj.at("d").get<double>();
            pf.processors.push_back(p);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    validate(pf);
    return pf;
}

// ---- schedule ---------------------------------------------------------------

inline nlohmann::json to_json(const Schedule& s, const TaskGraph& g, const Platform& pf) {
    nlohmann::json j;
    j["schema"] = schema_version;
    j["kind"] = "schedule";
    nlohmann::json replicas = nlohmann::json::array();
    for (const ReplicaRef& ref : s.placement_order()) {
        const Replica& r = s.replica(ref);
        replicas.push_back({{"task", r.task},
                            {"processor", r.processor},
                            {"frequency", r.frequency},
                            {"start", r.start},
                            {"finish", r.finish}});
    }
    j["replicas"] = std::move(replicas);
    j["summary"] = {{"makespan", makespan(s)},
                    {"energy", schedule_energy(s, g, pf)},
                    {"reliability", schedule_reliability(s, g, pf)},
                    {"ln_reliability", ln_schedule_reliability(s, g, pf)}};
    return j;
}

inline void save_schedule(const Schedule& s, const TaskGraph& g, const Platform& pf,
                          const std::string& path) {
    detail::write_file(path, to_json(s, g, pf));
}

struct LoadedSchedule {
    Schedule schedule;
    double makespan = 0.0;
    double energy = 0.0;
    double reliability = 1.0;
    double ln_reliability = 0.0;
};

inline LoadedSchedule load_schedule(const std::string& path, const TaskGraph& g,
                                    const Platform& pf) {
    const nlohmann::json j = detail::parse_file(path, "schedule");
    LoadedSchedule out;
    out.schedule = Schedule(g.task_count(), pf.size());
    try {
        for (const auto& rj : j.at("replicas")) {
            Replica r;
            r.task = rj.at("task").get<TaskId>();
            r.processor = rj.at("processor").get<std::size_t>();
            r.frequency = rj.at("frequency").get<double>();
            r.start = rj.at("start").get<double>();
            r.finish = rj.at("finish").get<double>();
            out.schedule.append(r);
        }
        const auto& sj = j.at("summary");
        out.makespan = sj.at("makespan").get<double>();
        out.energy = sj.at("energy").get<double>();
        out.reliability = sj.at("reliability").get<double>();
        out.ln_reliability = sj.at("ln_reliability").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return out;
}

} // namespace relsched::io
