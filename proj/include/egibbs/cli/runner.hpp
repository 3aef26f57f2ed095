#pragma once

// Subcommand orchestration: builds the graph, point model, potentials and
// volumes from an ExperimentConfig, drives the library operation, and packs
// the outcome into a RunReport (JSON summary, CSV tables, timings).

#include <chrono>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "egibbs/certificate.hpp"
#include "egibbs/cli/config.hpp"
#include "egibbs/gibbs.hpp"
#include "egibbs/graph.hpp"
#include "egibbs/heat_kernel.hpp"
#include "egibbs/interaction.hpp"
#include "egibbs/loop_space.hpp"
#include "egibbs/rng.hpp"
#include "egibbs/suites.hpp"

namespace egibbs::cli {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kArtifactVersion = "0.1.0";

enum ExitStatus : int { kPass = 0, kFail = 1, kError = 2 };

struct CsvTable {
    std::string name;  ///< file name inside the output directory
    std::string content;
};

struct RunReport {
    json report;   ///< deterministic for a given (config, seed)
    json timings;  ///< wall-clock data, kept out of `report`
    std::vector<CsvTable> tables;
    int exit_status = kError;
};

inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names = {"check-graph",   "semigroup", "dlr-verify",       "lemma1-verify",
                                                   "certificate",   "tv-decay",  "random-potentials"};
    return names;
}

// ---------------------------------------------------------------------------
// Builders

inline Graph graph_from(const ExperimentConfig& cfg) {
    if (cfg.has("graph.file")) {
        std::ifstream in(cfg.text("graph.file"));
        return parse_edge_list(in);
    }
    const std::string gen = cfg.text("graph.generator");
    const auto n = std::size_t(cfg.integer("graph.size"));
    if (gen == "chain") return chain_graph(n);
    if (gen == "cycle") return cycle_graph(n);
    if (gen == "star") return star_graph(n);
    if (gen == "complete") return complete_graph(n);
    if (gen == "grid") return grid_graph(std::size_t(cfg.integer("graph.width")), std::size_t(cfg.integer("graph.height")));
    return random_bounded_graph(n, std::size_t(cfg.integer("graph.max_degree")),
                                std::size_t(cfg.integer("graph.extra_edges")), derive_seed(cfg.seed(), "graph"));
}

inline Eigen::MatrixXd read_matrix(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ss(line);
        std::vector<double> row;
        double x = 0.0;
        while (ss >> x) row.push_back(x);
        if (!ss.eof()) throw heat_error("ParseError", "non-numeric entry in weight matrix");
        rows.push_back(std::move(row));
    }
    const std::size_t m = rows.size();
    Eigen::MatrixXd w(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
        if (rows[i].size() != m) throw heat_error("InvalidWeights", "weight matrix must be square");
        for (std::size_t j = 0; j < m; ++j) w(Eigen::Index(i), Eigen::Index(j)) = rows[i][j];
    }
    return w;
}

inline HeatKernelModel model_from(const ExperimentConfig& cfg) {
    const auto m = std::size_t(cfg.integer("manifold.points"));
    if (cfg.text("manifold.kind") == "circle_spectral")
        return HeatKernelModel::circle_spectral(m, std::size_t(cfg.integer("manifold.mode_cutoff")));
    if (cfg.has("manifold.weight_matrix_file")) {
        std::ifstream in(cfg.text("manifold.weight_matrix_file"));
        return HeatKernelModel::discrete_laplacian(read_matrix(in));
    }
    if (m == 1) return HeatKernelModel::single_point();
    return HeatKernelModel::discrete_laplacian(cfg.text("manifold.builtin_weights") == "cycle" && m >= 3
                                                   ? cycle_weights(m)
                                                   : complete_weights(m));
}

/// Blocks "edge l l'" followed by `points` rows of `points` reals; '#' comments.
inline PotentialAssignment parse_potential_file(std::istream& in, std::size_t points) {
    PotentialAssignment out(points);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        lines.push_back(line);
    }
    for (std::size_t i = 0; i < lines.size();) {
        std::istringstream head(lines[i]);
        std::string tag;
        long long a = 0, b = 0;
        if (!(head >> tag >> a >> b) || tag != "edge")
            throw interaction_error("ParseError", "expected 'edge <u> <v>' but got: " + lines[i]);
        std::vector<double> t;
        for (std::size_t r = 1; r <= points; ++r) {
            if (i + r >= lines.size()) throw interaction_error("ParseError", "truncated potential block");
            std::istringstream row(lines[i + r]);
            double x = 0.0;
            std::size_t count = 0;
            while (row >> x) {
                t.push_back(x);
                ++count;
            }
            if (count != points) throw interaction_error("ParseError", "potential rows must have `points` entries");
        }
        out.set(Edge(VertexId(a), VertexId(b)), PairPotential(points, std::move(t)));
        i += points + 1;
    }
    return out;
}

inline EnsembleSpec ensemble_from(const ExperimentConfig& cfg);

inline PotentialAssignment potentials_from(const ExperimentConfig& cfg, const Graph& g, std::size_t points) {
    if (cfg.has("potentials.file")) {
        std::ifstream in(cfg.text("potentials.file"));
        auto v = parse_potential_file(in, points);
        v.check_against(g);
        return v;
    }
    if (cfg.has("potentials.constant"))
        return PotentialAssignment::uniform(g, PairPotential::constant(points, cfg.real("potentials.constant")));
    if (cfg.has("potentials.product"))
        return PotentialAssignment::uniform(g, PairPotential::product(points, cfg.real("potentials.product")));
    if (cfg.has("potentials.random_norm")) {
        std::mt19937_64 rng(derive_seed(cfg.seed(), "potentials"));
        PotentialAssignment v(points);
        for (const Edge& e : g.edges()) v.set(e, random_potential(points, cfg.real("potentials.random_norm"), rng));
        return v;
    }
    if (cfg.has("ensemble.family")) {
        std::mt19937_64 rng(derive_seed(cfg.seed(), "potentials"));
        return sample_assignment(ensemble_from(cfg), g, points, rng).potentials;
    }
    return PotentialAssignment(points);
}

inline EnsembleSpec ensemble_from(const ExperimentConfig& cfg) {
    if (!cfg.has("ensemble.family")) throw config_error("MissingRequired", "ensemble.family is required");
    std::map<std::string, double> params;
    for (auto it = cfg.at("ensemble.params").begin(); it != cfg.at("ensemble.params").end(); ++it)
        params[it.key()] = it->get<double>();
    return make_ensemble(cfg.text("ensemble.family"), params, cfg.real("ensemble.lambda"), cfg.real("ensemble.theta"));
}

inline VertexSet volume_from(const ExperimentConfig& cfg, const std::string& key, const VertexSet& fallback) {
    if (!cfg.has(key)) return fallback;
    return VertexSet(cfg.list<VertexId>(key));
}

/// The middle vertex in id order.
inline VertexSet default_window(const Graph& g) { return VertexSet{g.vertices()[g.size() / 2]}; }

inline LoopFieldConfig boundary_from(const ExperimentConfig& cfg, const Graph& g, const BridgeMeasure& bridge) {
    if (cfg.text("boundary.kind") == "sampled") {
        std::mt19937_64 rng(derive_seed(cfg.seed(), "boundary"));
        LoopFieldConfig y;
        for (VertexId v : g.vertices()) y[v] = bridge.sample(rng);
        return y;
    }
    return constant_field(g, bridge, std::size_t(cfg.integer("boundary.point")));
}

inline Theorem1Params cert_params_from(const ExperimentConfig& cfg) {
    Theorem1Params p;
    p.radii = cfg.list<std::size_t>("cert.radius_list");
    p.max_length = std::size_t(cfg.integer("cert.lmax"));
    p.threshold = cfg.real("cert.threshold");
    p.delta_grid = cfg.list<double>("cert.delta_grid");
    return p;
}

inline json vertex_list(const VertexSet& s) { return json(s.members()); }

inline json interpretation_flags(const ExperimentConfig& cfg) {
    json flags;
    flags["path_weight_product"] = "kappa evaluated per consecutive path edge";
    flags["path_length"] = "edge count";
    flags["path_sum_domain"] = "admissible paths restricted to vertices of Delta";
    json norm;
    norm["normalized"] = true;
    try {
        norm["constant"] = bridge_normalizer(model_from(cfg), TimeGrid(std::size_t(cfg.integer("grid.slices"))));
    } catch (const Error&) {
        norm["constant"] = nullptr;
    }
    flags["bridge_normalization"] = norm;
    return flags;
}

inline std::string fmt(double x) {
    std::ostringstream ss;
    ss.precision(17);
    ss << x;
    return ss.str();
}

// ---------------------------------------------------------------------------
// Subcommands. Each fills `results`, appends CSV tables and returns pass/fail.

namespace commands {

inline bool check_graph(const ExperimentConfig& cfg, json& results, std::vector<CsvTable>& tables) {
    Graph g = graph_from(cfg);
    PhiFunction phi(cfg.list<double>("phi.table"), cfg.real("phi.coefficient"), cfg.real("phi.exponent"));
    std::optional<std::size_t> radius;
    if (cfg.has("phi.radius")) radius = std::size_t(cfg.integer("phi.radius"));
    auto rep = check_phi_condition(g, phi, std::size_t(cfg.integer("phi.series_terms")), radius);

    results["vertices"] = g.size();
    results["edges"] = g.edges().size();
    results["max_degree"] = g.max_degree();
    results["violation_count"] = rep.violations.size();
    results["series_partial_sum"] = rep.series_partial_sum;
    results["series_terms"] = rep.series_terms;
    results["series_tail_bound"] = std::isfinite(rep.series_tail_bound) ? json(rep.series_tail_bound) : json("inf");
    results["checked_radius"] = radius ? json(*radius) : json("all pairs");
    std::string csv = "u,v,distance,required\n";
    for (const auto& v : rep.violations) csv += std::to_string(v.u) + "," + std::to_string(v.v) + "," +
                                                std::to_string(v.distance) + "," + fmt(v.required) + "\n";
    tables.push_back({"phi_violations.csv", csv});
    return rep.violations.empty() && std::isfinite(rep.series_tail_bound);
}

inline bool semigroup(const ExperimentConfig& cfg, json& results, std::vector<CsvTable>& tables) {
    HeatKernelModel model = model_from(cfg);
    const auto n = std::size_t(cfg.integer("grid.slices"));
    double worst_semi = 0.0, worst_stoch = 0.0, worst_trace = 0.0;
    std::string csv = "s,t,semigroup_defect\n";
    for (std::size_t i = 1; i <= n; ++i) {
        double s = double(i) / double(n);
        worst_stoch = std::max(worst_stoch, stochasticity_defect(model, s));
        worst_trace = std::max(worst_trace, trace_defect(model, s));
        for (std::size_t j = 1; i + j <= n; ++j) {
            double t = double(j) / double(n);
            double d = semigroup_defect(model, s, t);
            worst_semi = std::max(worst_semi, d);
            csv += fmt(s) + "," + fmt(t) + "," + fmt(d) + "\n";
        }
    }
    results["model"] = model.kind();
    results["points"] = model.point_count();
    results["modes"] = model.mode_count();
    results["max_semigroup_defect"] = worst_semi;
    results["max_stochasticity_defect"] = worst_stoch;
    results["max_trace_defect"] = worst_trace;
    tables.push_back({"semigroup.csv", csv});
    double tol = cfg.real("tolerance.semigroup");
    return worst_semi <= tol && worst_stoch <= tol && worst_trace <= tol;
}

inline bool dlr_verify(const ExperimentConfig& cfg, json& results, std::vector<CsvTable>& tables) {
    Graph g = graph_from(cfg);
    HeatKernelModel hk = model_from(cfg);
    BridgeMeasure bridge(hk, TimeGrid(std::size_t(cfg.integer("grid.slices"))), std::size_t(cfg.integer("enumeration.cap")));
    GibbsModel model(g, bridge, potentials_from(cfg, g, hk.point_count()));
    VertexSet outer = volume_from(cfg, "volume.delta", g.vertex_set());
    LoopFieldConfig y = boundary_from(cfg, g, model.bridge());

    std::vector<VertexSet> inners;
    if (cfg.has("volume.lambda")) {
        inners.push_back(volume_from(cfg, "volume.lambda", {}));
    } else {
        const auto& mem = outer.members();
        if (mem.size() > 16) throw config_error("RangeViolation", "volume.delta too large to scan all subsets");
        for (std::uint64_t mask = 1; mask < (std::uint64_t(1) << mem.size()); ++mask) {
            std::vector<VertexId> s;
            for (std::size_t k = 0; k < mem.size(); ++k)
                if (mask & (std::uint64_t(1) << k)) s.push_back(mem[k]);
            inners.emplace_back(std::move(s));
        }
    }
    double worst = 0.0;
    std::string csv = "lambda,defect\n";
    json rows = json::array();
    for (const auto& inner : inners) {
        double d = dlr_defect(model, inner, outer, y);
        worst = std::max(worst, d);
        std::string name;
        for (VertexId v : inner) name += (name.empty() ? "" : " ") + std::to_string(v);
        csv += "\"" + name + "\"," + fmt(d) + "\n";
        rows.push_back({{"lambda", vertex_list(inner)}, {"defect", d}});
    }
    results["delta"] = vertex_list(outer);
    results["log_Z_delta"] = partition_function(model, outer, y);
    results["defects"] = rows;
    results["max_defect"] = worst;

    const auto sweeps = std::size_t(cfg.integer("sampler.sweeps"));
    if (sweeps > 0) {
        auto exact = specification_table(model, outer, y);
        SamplerState st = make_sampler(model, outer, y, derive_seed(cfg.seed(), "sampler"));
        for (std::int64_t k = 0; k < cfg.integer("sampler.burnin"); ++k) gibbs_sweep(st, model);
        const std::size_t L = model.loops_per_site();
        std::vector<std::vector<double>> counts(outer.size(), std::vector<double>(L, 0.0));
        for (std::size_t k = 0; k < sweeps; ++k) {
            gibbs_sweep(st, model);
            for (std::size_t p = 0; p < outer.size(); ++p) counts[p][st.state[g.index(outer[p])]] += 1.0;
        }
        double dev = 0.0;
        for (std::size_t p = 0; p < outer.size(); ++p) {
            auto mtab = marginal(exact, VertexSet{outer[p]});
            for (std::size_t l = 0; l < L; ++l)
                dev = std::max(dev, std::abs(counts[p][l] / double(sweeps) - mtab.probabilities[l]));
        }
        results["sampler"] = {{"sweeps", sweeps}, {"max_marginal_deviation", dev}};
    }
    tables.push_back({"dlr_defects.csv", csv});
    return worst <= cfg.real("tolerance.defect");
}

inline bool lemma1_verify(const ExperimentConfig& cfg, json& results, std::vector<CsvTable>& tables) {
    Lemma1SuiteOptions opt;
    opt.instances = std::size_t(cfg.integer("suite.instances"));
    opt.max_vertices = std::size_t(cfg.integer("suite.max_vertices"));
    opt.max_norm = cfg.real("suite.max_norm");
    opt.points = cfg.list<std::size_t>("suite.points");
    opt.slices = cfg.list<std::size_t>("suite.slices");
    opt.max_length = std::size_t(cfg.integer("cert.lmax"));
    opt.max_attempts = 50 * opt.instances;
    if (opt.points.empty() || opt.slices.empty())
        throw config_error("RangeViolation", "suite.points and suite.slices must be nonempty");
    auto res = lemma1_random_suite(opt, derive_seed(cfg.seed(), "lemma1-suite"));
    std::string csv = "instance,vertices,points,slices,max_norm,lhs,rhs,slack\n";
    double min_slack = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < res.instances.size(); ++i) {
        const auto& inst = res.instances[i];
        double slack = inst.result.rhs - inst.result.lhs;
        min_slack = std::min(min_slack, slack);
        csv += std::to_string(i) + "," + std::to_string(inst.vertices) + "," + std::to_string(inst.points) + "," +
               std::to_string(inst.slices) + "," + fmt(inst.max_norm) + "," + fmt(inst.result.lhs) + "," +
               fmt(inst.result.rhs) + "," + fmt(slack) + "\n";
    }
    results["instances"] = res.instances.size();
    results["attempts"] = res.attempts;
    results["skipped_divergent"] = res.skipped_divergent;
    results["violations"] = res.violations;
    results["min_slack"] = res.instances.empty() ? json(nullptr) : json(min_slack);
    tables.push_back({"lemma1.csv", csv});
    return res.violations == 0 && res.instances.size() == opt.instances;
}

inline json theorem1_json(const Theorem1Report& rep) {
    json rows = json::array();
    for (const auto& r : rep.records)
        rows.push_back({{"radius", r.radius},
                        {"volume_size", r.volume_size},
                        {"boundary_size", r.boundary_size},
                        {"B_r", std::isfinite(r.bound) ? json(r.bound) : json("inf")},
                        {"tail", std::isfinite(r.tail) ? json(r.tail) : json("inf")},
                        {"spectral_radius", r.spectral_radius},
                        {"converged", r.converged}});
    json omega = json::array();
    for (auto [d, in] : rep.omega_delta) omega.push_back({{"delta", d}, {"member", in}});
    return {{"radii", rows}, {"verdict", rep.verdict_string()}, {"kappa", rep.kappa}, {"omega_delta", omega}};
}

inline bool certificate(const ExperimentConfig& cfg, json& results, std::vector<CsvTable>& tables) {
    Graph g = graph_from(cfg);
    auto v = potentials_from(cfg, g, std::size_t(cfg.integer("manifold.points")));
    VertexSet window = volume_from(cfg, "volume.lambda", default_window(g));
    auto rep = certify_theorem1(g, v, window, cert_params_from(cfg));
    results = theorem1_json(rep);
    results["window"] = vertex_list(window);
    std::string csv = "radius,B_r,tail,verdict\n";
    for (const auto& r : rep.records)
        csv += std::to_string(r.radius) + "," + fmt(r.bound) + "," + fmt(r.tail) + "," + rep.verdict_string() + "\n";
    tables.push_back({"certificate.csv", csv});
    return rep.certified();
}

inline bool tv_decay_cmd(const ExperimentConfig& cfg, json& results, std::vector<CsvTable>& tables) {
    Graph g = graph_from(cfg);
    HeatKernelModel hk = model_from(cfg);
    BridgeMeasure bridge(hk, TimeGrid(std::size_t(cfg.integer("grid.slices"))), std::size_t(cfg.integer("enumeration.cap")));
    GibbsModel model(g, bridge, potentials_from(cfg, g, hk.point_count()));
    VertexSet window = volume_from(cfg, "volume.lambda", default_window(g));
    std::size_t pa = std::size_t(cfg.integer("boundary.point"));
    std::size_t pb = cfg.has("boundary.alt_point") ? std::size_t(cfg.integer("boundary.alt_point")) : hk.point_count() - 1;
    auto pts = tv_decay(model, window, cfg.list<std::size_t>("cert.radius_list"), constant_field(g, model.bridge(), pa),
                        constant_field(g, model.bridge(), pb));
    std::string csv = "radius,volume_size,tv\n";
    json rows = json::array();
    bool monotone = true;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        csv += std::to_string(pts[i].radius) + "," + std::to_string(pts[i].volume_size) + "," + fmt(pts[i].tv) + "\n";
        rows.push_back({{"radius", pts[i].radius}, {"volume_size", pts[i].volume_size}, {"tv", pts[i].tv}});
        if (i > 0 && pts[i].tv > pts[i - 1].tv + 1e-15) monotone = false;
    }
    results["window"] = vertex_list(window);
    results["pins"] = {pa, pb};
    results["tv"] = rows;
    results["nonincreasing"] = monotone;
    tables.push_back({"tv_decay.csv", csv});
    return monotone;
}

inline bool random_potentials(const ExperimentConfig& cfg, json& results, std::vector<CsvTable>& tables) {
    Graph g = graph_from(cfg);
    EnsembleSpec spec = ensemble_from(cfg);
    VertexSet window = volume_from(cfg, "volume.lambda", default_window(g));
    auto rep = certify_theorem2(g, spec, std::size_t(cfg.integer("manifold.points")),
                                std::size_t(cfg.integer("thm2.trials")), derive_seed(cfg.seed(), "thm2-master"), window,
                                cert_params_from(cfg));
    std::string csv = "trial,seed,tail_fraction,kappa,verdict\n";
    json trials = json::array();
    for (const auto& t : rep.trials) {
        std::string verdict = verdict_text(t.verdict, t.certified_radius);
        csv += std::to_string(t.trial) + "," + std::to_string(t.seed) + "," + fmt(t.tail_fraction) + "," + fmt(t.kappa) +
               "," + verdict + "\n";
        trials.push_back({{"trial", t.trial}, {"seed", t.seed}, {"tail_fraction", t.tail_fraction},
                          {"kappa", t.kappa}, {"verdict", verdict}});
    }
    results["certified_fraction"] = rep.certified_fraction;
    results["mean_tail_fraction"] = rep.mean_tail_fraction;
    results["lambda"] = rep.lambda;
    results["theta"] = rep.theta;
    results["max_degree"] = rep.max_degree;
    results["window"] = vertex_list(window);
    results["trials"] = trials;
    tables.push_back({"random_potentials.csv", csv});
    return rep.certified_fraction >= cfg.real("thm2.required_fraction");
}

} // namespace commands

/// Runs one subcommand. Module errors are reported with exit status 2 and
/// their module-qualified code.
inline RunReport run(const std::string& subcommand, const ExperimentConfig& cfg) {
    using clock = std::chrono::steady_clock;
    static const std::map<std::string, std::function<bool(const ExperimentConfig&, json&, std::vector<CsvTable>&)>>
        table = {{"check-graph", commands::check_graph},         {"semigroup", commands::semigroup},
                 {"dlr-verify", commands::dlr_verify},           {"lemma1-verify", commands::lemma1_verify},
                 {"certificate", commands::certificate},         {"tv-decay", commands::tv_decay_cmd},
                 {"random-potentials", commands::random_potentials}};

    RunReport out;
    out.report["schema_version"] = kSchemaVersion;
    out.report["artifact_version"] = kArtifactVersion;
    out.report["subcommand"] = subcommand;
    out.report["config"] = cfg.resolved;
    out.report["seed"] = cfg.seed();

    auto it = table.find(subcommand);
    if (it == table.end()) {
        out.report["status"] = "error";
        out.report["error"] = {{"code", "cli_runner.UnknownSubcommand"}, {"message", "unknown subcommand " + subcommand}};
        out.exit_status = kError;
        return out;
    }
    auto start = clock::now();
    try {
        out.report["interpretation"] = interpretation_flags(cfg);
        json results = json::object();
        bool ok = it->second(cfg, results, out.tables);
        out.report["results"] = results;
        json tables = json::array();
        for (const auto& t : out.tables)
            tables.push_back({{"name", t.name},
                              {"schema_version", kSchemaVersion},
                              {"columns", t.content.substr(0, t.content.find('\n'))}});
        out.report["tables"] = tables;
        out.report["status"] = ok ? "pass" : "fail";
        out.exit_status = ok ? kPass : kFail;
    } catch (const Error& e) {
        out.report["status"] = "error";
        out.report["error"] = {{"code", e.code()}, {"message", e.what()}};
        out.exit_status = kError;
    }
    auto secs = std::chrono::duration<double>(clock::now() - start).count();
    out.timings = {{"subcommand", subcommand}, {"wall_seconds", secs}};
    return out;
}

} // namespace egibbs::cli
