// tailcausal command-line tool: model generation, simulation, AIR / CTC
// computation, weight recovery, pairwise classification, the end-to-end
// pipeline, and the Monte Carlo oracles. Every stage exchanges inspectable
// JSON/CSV files and embeds tool version, input hash, and effective
// configuration in its output.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <random>
#include <string>

#include "tailcausal/io.hpp"
#include "tailcausal/tailcausal.hpp"

namespace tc = tailcausal;
using nlohmann::json;

namespace {

struct GlobalOptions {
    int threads = 1;
    bool no_timestamp = false;
};

std::uint64_t ensure_seed(std::optional<std::uint64_t> seed) {
    if (seed) return *seed;
    // No seed given: generate one and record it in the output metadata.
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

tc::io::Meta make_meta(const GlobalOptions& global, json config, std::optional<std::string> input_hash) {
    tc::io::Meta meta;
    meta.config = std::move(config);
    meta.input_hash = std::move(input_hash);
    meta.with_timestamp = !global.no_timestamp;
    return meta;
}

tc::StructuralFunctionSpec random_spec(const tc::Dag& dag, int node, const std::string& family, double p,
                                       double coef_min, double coef_max, tc::SplitMix64& rng) {
    tc::StructuralFunctionSpec spec;
    std::string pick = family;
    if (family == "mixed") {
        const char* families[] = {"linear", "max_linear", "lp"};
        pick = families[rng.next_below(3)];
    }
    spec.family = tc::structural_family_from_string(pick);
    if (spec.family == tc::StructuralFamily::lp) spec.p = p;
    for (int parent : dag.parents(node)) {
        spec.parent_coefficients[parent] = rng.uniform(coef_min, coef_max);
    }
    return spec;
}

std::size_t resolve_k(const tc::SampleMatrix& samples, std::optional<std::size_t> k_flag,
                      const std::string& k_rule) {
    if (k_flag) return *k_flag;
    const auto colon = k_rule.find(':');
    if (colon == std::string::npos) {
        throw tc::ValidationError("--k-rule must look like power:0.4 or fixed:100");
    }
    const tc::KRule rule = tc::k_rule_from_string(k_rule.substr(0, colon));
    const double param = std::stod(k_rule.substr(colon + 1));
    return tc::choose_k(samples.n, rule, param);
}

int run(int argc, char** argv) {
    CLI::App app{"Heavy-tailed homogeneous SCMs: simulation, tail-coefficient estimation, causal discovery"};
    app.require_subcommand(1);

    GlobalOptions global;
    if (const char* env = std::getenv("TAILCAUSAL_THREADS")) global.threads = std::max(1, std::atoi(env));
    app.add_option("--threads", global.threads, "Worker threads for simulation")->capture_default_str();
    app.add_flag("--no-timestamp", global.no_timestamp, "Omit the timestamp field from output metadata");

    // --- gen-model ---------------------------------------------------------
    auto* gen = app.add_subcommand("gen-model", "Generate a random model file");
    int gen_d = 4;
    double gen_edge_prob = 0.5, gen_p = 2.0, gen_alpha = 1.5, gen_scale = 1.0;
    double gen_coef_min = 0.1, gen_coef_max = 2.0;
    std::string gen_family = "linear", gen_noise = "pareto", gen_dag_file, gen_out;
    std::optional<std::uint64_t> gen_seed;
    gen->add_option("--d", gen_d, "Node count")->capture_default_str();
    gen->add_option("--edge-prob", gen_edge_prob, "Forward-edge probability")->capture_default_str();
    gen->add_option("--family", gen_family, "linear | max_linear | lp | mixed")->capture_default_str();
    gen->add_option("--p", gen_p, "Exponent for the lp family")->capture_default_str();
    gen->add_option("--alpha", gen_alpha, "Noise tail index")->capture_default_str();
    gen->add_option("--noise-family", gen_noise, "pareto | frechet | log_perturbed_pareto")->capture_default_str();
    gen->add_option("--scale", gen_scale, "Noise scale")->capture_default_str();
    gen->add_option("--coef-min", gen_coef_min, "Coefficient range lower bound")->capture_default_str();
    gen->add_option("--coef-max", gen_coef_max, "Coefficient range upper bound")->capture_default_str();
    gen->add_option("--dag-file", gen_dag_file, "Edge-list file ('j i' per line) instead of a random DAG");
    gen->add_option("--seed", gen_seed, "RNG seed (generated and recorded if omitted)");
    gen->add_option("-o,--output", gen_out, "Output model.json")->required();
    gen->callback([&]() {
        const std::uint64_t seed = ensure_seed(gen_seed);
        tc::SplitMix64 rng(seed, 1);
        tc::Dag dag = gen_dag_file.empty()
                          ? tc::random_dag(gen_d, gen_edge_prob, seed)
                          : tc::io::load_edge_list(gen_dag_file, gen->count("--d") ? std::optional<int>(gen_d)
                                                                                   : std::nullopt);
        tc::HscmModel model{dag, {}, tc::NoiseSpec{tc::noise_family_from_string(gen_noise), gen_alpha, gen_scale}};
        for (int node = 1; node <= dag.node_count(); ++node) {
            model.node_functions.push_back(
                random_spec(dag, node, gen_family, gen_p, gen_coef_min, gen_coef_max, rng));
        }
        model.validate();
        json config{{"subcommand", "gen-model"}, {"d", dag.node_count()},     {"edge_prob", gen_edge_prob},
                    {"family", gen_family},      {"p", gen_p},                {"alpha", gen_alpha},
                    {"noise_family", gen_noise}, {"scale", gen_scale},        {"coef_min", gen_coef_min},
                    {"coef_max", gen_coef_max},  {"seed", seed},              {"threads", global.threads}};
        if (!gen_dag_file.empty()) config["dag_file"] = gen_dag_file;
        std::optional<std::string> input_hash;
        if (!gen_dag_file.empty()) input_hash = tc::io::hash_file(gen_dag_file);
        tc::io::save_model(model, gen_out, make_meta(global, config, input_hash));
        std::cout << "wrote model with d=" << dag.node_count() << " edges=" << dag.edges().size() << " to "
                  << gen_out << "\n";
    });

    // --- simulate ----------------------------------------------------------
    auto* sim = app.add_subcommand("simulate", "Simulate a model to samples.csv");
    std::string sim_model, sim_out;
    std::size_t sim_n = 10000;
    std::uint64_t sim_seed = 0;
    sim->add_option("--model", sim_model, "Input model.json")->required();
    sim->add_option("--n", sim_n, "Replication count")->capture_default_str();
    // the CSV format carries no metadata block, so the seed must be explicit
    sim->add_option("--seed", sim_seed, "RNG seed")->required();
    sim->add_option("-o,--output", sim_out, "Output samples.csv")->required();
    sim->callback([&]() {
        const tc::HscmModel model = tc::io::load_model(sim_model);
        const tc::SampleMatrix samples = tc::simulate(model, sim_n, sim_seed, global.threads);
        tc::io::save_samples_csv(samples, sim_out);
        std::cout << "wrote " << samples.n << " x " << samples.d << " samples to " << sim_out << "\n";
    });

    // --- air ----------------------------------------------------------------
    auto* air_cmd = app.add_subcommand("air", "Compute the AIR matrix (impulse + path cross-check)");
    std::string air_model, air_out, air_csv;
    std::uint64_t air_max_paths = 1'000'000;
    air_cmd->add_option("--model", air_model, "Input model.json")->required();
    air_cmd->add_option("--max-paths", air_max_paths, "Path enumeration cap")->capture_default_str();
    air_cmd->add_option("--csv", air_csv, "Also export the raw AIR as CSV");
    air_cmd->add_option("-o,--output", air_out, "Output air.json")->required();
    air_cmd->callback([&]() {
        const tc::HscmModel model = tc::io::load_model(air_model);
        const tc::AirMatrix air = tc::air_by_impulse(model);
        std::optional<double> disagreement;
        std::string paths_note;
        if (!model.uniform_family()) {
            paths_note = "skipped: mixed-family model has no closed path formula";
        } else {
            try {
                const tc::AirMatrix by_paths = tc::air_by_paths(model, air_max_paths);
                double worst = 0.0;
                for (int h = 1; h <= air.f.dim(); ++h) {
                    for (int i = 1; i <= air.f.dim(); ++i) {
                        const double a = air.f.at(h, i), b = by_paths.f.at(h, i);
                        worst = std::max(worst, std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}));
                    }
                }
                disagreement = worst;
                if (worst > 1e-9) {
                    throw tc::ValidationError("impulse and path AIR methods disagree by " + std::to_string(worst));
                }
            } catch (const tc::ResourceError& e) {
                paths_note = std::string("skipped: ") + e.what();
            }
        }
        const auto [st, weights] = tc::standardize(air, model.noise.alpha);
        json config{{"subcommand", "air"}, {"model", air_model}, {"max_paths", air_max_paths}};
        tc::io::write_json_file(air_out, tc::io::air_to_json(air, st, weights, disagreement, paths_note,
                                                             make_meta(global, config,
                                                                       tc::io::hash_file(air_model))));
        if (!air_csv.empty()) tc::io::save_matrix_csv(air.f, air_csv, "source\\target");
        std::cout << "wrote AIR (d=" << air.f.dim() << ") to " << air_out;
        if (disagreement) std::cout << "; methods agree within " << *disagreement;
        std::cout << "\n";
    });

    // --- ctc ----------------------------------------------------------------
    auto* ctc_cmd = app.add_subcommand("ctc", "Population or estimated CTC matrix to gamma.json");
    std::string ctc_model, ctc_samples, ctc_out, ctc_csv, ctc_k_rule = "power:0.4";
    std::optional<std::size_t> ctc_k;
    ctc_cmd->add_option("--model", ctc_model, "Model file for the exact population matrix");
    ctc_cmd->add_option("--samples", ctc_samples, "Samples CSV for the rank-based estimate");
    ctc_cmd->add_option("--k", ctc_k, "Exceedance count (overrides --k-rule)");
    ctc_cmd->add_option("--k-rule", ctc_k_rule, "power:<exp> or fixed:<k>")->capture_default_str();
    ctc_cmd->add_option("--csv", ctc_csv, "Also export gamma as CSV (rows = conditioning node)");
    ctc_cmd->add_option("-o,--output", ctc_out, "Output gamma.json")->required();
    ctc_cmd->callback([&]() {
        if (ctc_model.empty() == ctc_samples.empty()) {
            throw tc::ValidationError("ctc needs exactly one of --model (population) or --samples (estimated)");
        }
        tc::CtcMatrix gamma{tc::SquareMatrix(1), tc::CtcKind::population, std::nullopt};
        std::string input_path;
        json config{{"subcommand", "ctc"}};
        if (!ctc_model.empty()) {
            const tc::HscmModel model = tc::io::load_model(ctc_model);
            const auto [st, weights] = tc::standardize(tc::air_by_impulse(model), model.noise.alpha);
            gamma = tc::population_ctc(weights, model.dag);
            input_path = ctc_model;
            config["model"] = ctc_model;
        } else {
            const tc::SampleMatrix samples = tc::io::load_samples_csv(ctc_samples);
            const std::size_t k = resolve_k(samples, ctc_k, ctc_k_rule);
            gamma = tc::empirical_ctc(samples, k);
            input_path = ctc_samples;
            config["samples"] = ctc_samples;
            config["k"] = k;
            config["k_rule"] = ctc_k_rule;
        }
        tc::io::save_ctc(gamma, ctc_out, make_meta(global, config, tc::io::hash_file(input_path)));
        if (!ctc_csv.empty()) tc::io::save_matrix_csv(gamma.gamma, ctc_csv, "condition\\target");
        std::cout << "wrote " << tc::to_string(gamma.kind) << " gamma (d=" << gamma.gamma.dim() << ")";
        if (gamma.k_used) std::cout << " with k=" << *gamma.k_used;
        std::cout << " to " << ctc_out << "\n";
    });

    // --- recover -------------------------------------------------------------
    auto* rec = app.add_subcommand("recover", "Recover the weight matrix from a gamma.json");
    std::string rec_gamma, rec_out;
    std::optional<double> rec_alpha, rec_delta;
    rec->add_option("--gamma", rec_gamma, "Input gamma.json")->required();
    rec->add_option("--alpha", rec_alpha, "Tail index for reconstructing the standardized AIR");
    rec->add_option("--delta", rec_delta, "Saturation tolerance (default 1e-9 population, 0.05 estimated)");
    rec->add_option("-o,--output", rec_out, "Output weights.json")->required();
    rec->callback([&]() {
        const tc::CtcMatrix gamma = tc::io::load_ctc(rec_gamma);
        const double delta = rec_delta.value_or(gamma.kind == tc::CtcKind::population ? 1e-9 : 0.05);
        std::vector<std::string> diagnostics;
        const tc::WeightMatrix weights = tc::recover_weights(gamma, delta, &diagnostics);
        std::optional<tc::StandardizedAir> st;
        if (rec_alpha) {
            st = tc::StandardizedAir{tc::SquareMatrix(weights.w.dim()), *rec_alpha};
            for (int h = 1; h <= weights.w.dim(); ++h) {
                for (int i = 1; i <= weights.w.dim(); ++i) {
                    st->f.at(h, i) = std::pow(weights.w.at(h, i), 1.0 / *rec_alpha);
                }
            }
        }
        json config{{"subcommand", "recover"}, {"gamma", rec_gamma}, {"delta", delta}};
        if (rec_alpha) config["alpha"] = *rec_alpha;
        tc::io::write_json_file(rec_out, tc::io::weights_to_json(weights, rec_alpha, st,
                                                                 make_meta(global, config,
                                                                           tc::io::hash_file(rec_gamma))));
        for (const auto& d : diagnostics) std::cerr << "note: " << d << "\n";
        std::cout << "wrote recovered weights (d=" << weights.w.dim() << ") to " << rec_out << "\n";
    });

    // --- classify -------------------------------------------------------------
    auto* cls = app.add_subcommand("classify", "Full discovery report from a gamma.json");
    std::string cls_gamma, cls_out, cls_mode;
    std::optional<double> cls_alpha, cls_delta;
    cls->add_option("--gamma", cls_gamma, "Input gamma.json")->required();
    cls->add_option("--delta", cls_delta, "Saturation tolerance (default 1e-9 population, 0.05 estimated)");
    cls->add_option("--mode", cls_mode, "Causal order mode: exact | ease (default exact for population)");
    cls->add_option("--alpha", cls_alpha, "Tail index for reconstructing the standardized AIR");
    cls->add_option("-o,--output", cls_out, "Output report.json")->required();
    cls->callback([&]() {
        const tc::CtcMatrix gamma = tc::io::load_ctc(cls_gamma);
        const bool population = gamma.kind == tc::CtcKind::population;
        const double delta = cls_delta.value_or(population ? 1e-9 : 0.05);
        const tc::OrderMode mode =
            cls_mode.empty() ? (population ? tc::OrderMode::exact : tc::OrderMode::ease)
                             : tc::order_mode_from_string(cls_mode);
        const tc::DiscoveryReport report = tc::discover(gamma, delta, mode, cls_alpha);
        json config{{"subcommand", "classify"},
                    {"gamma", cls_gamma},
                    {"delta", delta},
                    {"mode", tc::to_string(mode)}};
        if (cls_alpha) config["alpha"] = *cls_alpha;
        tc::io::write_json_file(cls_out,
                                tc::io::report_to_json(report, make_meta(global, config,
                                                                         tc::io::hash_file(cls_gamma))));
        std::cout << "wrote discovery report (d=" << report.d << ", " << report.verdicts.size() << " pairs) to "
                  << cls_out << "\n";
    });

    // --- pipeline ---------------------------------------------------------------
    auto* pipe = app.add_subcommand("pipeline", "simulate -> estimate CTC -> discover, with one seed");
    std::string pipe_model, pipe_out, pipe_mode = "ease", pipe_k_rule = "power:0.4";
    std::size_t pipe_n = 100000;
    std::optional<std::size_t> pipe_k;
    std::optional<std::uint64_t> pipe_seed;
    double pipe_delta = 0.05;
    pipe->add_option("--model", pipe_model, "Input model.json")->required();
    pipe->add_option("--n", pipe_n, "Replication count")->capture_default_str();
    pipe->add_option("--k", pipe_k, "Exceedance count (overrides --k-rule)");
    pipe->add_option("--k-rule", pipe_k_rule, "power:<exp> or fixed:<k>")->capture_default_str();
    pipe->add_option("--delta", pipe_delta, "Saturation tolerance")->capture_default_str();
    pipe->add_option("--mode", pipe_mode, "Causal order mode: exact | ease")->capture_default_str();
    pipe->add_option("--seed", pipe_seed, "RNG seed");
    pipe->add_option("-o,--output", pipe_out, "Output report.json")->required();
    pipe->callback([&]() {
        const std::uint64_t seed = ensure_seed(pipe_seed);
        const tc::HscmModel model = tc::io::load_model(pipe_model);
        const tc::SampleMatrix samples = tc::simulate(model, pipe_n, seed, global.threads);
        const std::size_t k = resolve_k(samples, pipe_k, pipe_k_rule);
        const tc::CtcMatrix gamma = tc::empirical_ctc(samples, k);
        const tc::DiscoveryReport report =
            tc::discover(gamma, pipe_delta, tc::order_mode_from_string(pipe_mode), model.noise.alpha);
        json config{{"subcommand", "pipeline"}, {"model", pipe_model},   {"n", pipe_n},
                    {"k", k},                   {"k_rule", pipe_k_rule}, {"delta", pipe_delta},
                    {"mode", pipe_mode},        {"seed", seed},          {"threads", global.threads}};
        tc::io::write_json_file(pipe_out,
                                tc::io::report_to_json(report, make_meta(global, config,
                                                                         tc::io::hash_file(pipe_model))));
        std::cout << "pipeline done: n=" << pipe_n << " k=" << k << " -> " << pipe_out << "\n";
    });

    // --- oracle ---------------------------------------------------------------
    auto* oracle = app.add_subcommand("oracle", "Brute-force / Monte Carlo validation checks");
    oracle->require_subcommand(1);

    auto* tail = oracle->add_subcommand("tail-ratio", "Tail-ratio limit check at a high quantile");
    std::string tail_model, tail_out;
    int tail_node = 1;
    double tail_quantile = 0.999;
    std::size_t tail_n = 1'000'000;
    std::optional<std::uint64_t> tail_seed;
    tail->add_option("--model", tail_model, "Input model.json")->required();
    tail->add_option("--node", tail_node, "Target node")->required();
    tail->add_option("--quantile", tail_quantile, "Noise quantile in (0.9, 1)")->capture_default_str();
    tail->add_option("--n", tail_n, "Replication count")->capture_default_str();
    tail->add_option("--seed", tail_seed, "RNG seed");
    tail->add_option("-o,--output", tail_out, "Optional JSON summary");
    tail->callback([&]() {
        const std::uint64_t seed = ensure_seed(tail_seed);
        const tc::HscmModel model = tc::io::load_model(tail_model);
        const tc::TailRatioResult r = tc::mc_tail_ratio(model, tail_node, tail_quantile, tail_n, seed);
        const double rel = std::abs(r.ratio - r.target) / r.target;
        if (!tail_out.empty()) {
            json config{{"subcommand", "oracle tail-ratio"}, {"model", tail_model}, {"node", tail_node},
                        {"quantile", tail_quantile},         {"n", tail_n},         {"seed", seed}};
            tc::io::write_json_file(tail_out, tc::io::tail_ratio_to_json(r, make_meta(global, config,
                                                                                      tc::io::hash_file(tail_model))));
        }
        std::cout << (rel <= 0.2 ? "PASS" : "WARN") << " tail-ratio node " << tail_node << ": ratio=" << r.ratio
                  << " target=" << r.target << " rel_err=" << rel << " exceedances=" << r.exceedances
                  << " seed=" << seed << "\n";
    });

    auto* brute = oracle->add_subcommand("brute-ctc", "Direct conditional-mean CTC estimate for one pair");
    std::string brute_model;
    int brute_j = 1, brute_i = 2;
    double brute_quantile = 0.998;
    std::size_t brute_n = 100'000;
    std::optional<std::uint64_t> brute_seed;
    brute->add_option("--model", brute_model, "Input model.json")->required();
    brute->add_option("--j", brute_j, "Conditioning node")->required();
    brute->add_option("--i", brute_i, "Evaluated node")->required();
    brute->add_option("--quantile", brute_quantile, "Threshold quantile in (0.9, 1)")->capture_default_str();
    brute->add_option("--n", brute_n, "Replication count")->capture_default_str();
    brute->add_option("--seed", brute_seed, "RNG seed");
    brute->callback([&]() {
        const std::uint64_t seed = ensure_seed(brute_seed);
        const tc::HscmModel model = tc::io::load_model(brute_model);
        const double estimate = tc::brute_force_ctc(model, brute_j, brute_i, brute_n, brute_quantile, seed);
        const auto [st, weights] = tc::standardize(tc::air_by_impulse(model), model.noise.alpha);
        const double population = tc::population_ctc(weights, model.dag).gamma.at(brute_j, brute_i);
        std::cout << (std::abs(estimate - population) <= 0.1 ? "PASS" : "WARN") << " brute-ctc (" << brute_j << ","
                  << brute_i << "): estimate=" << estimate << " population=" << population << " seed=" << seed
                  << "\n";
    });

    auto* rt = oracle->add_subcommand("roundtrip", "Population round-trip recovery over random graphs");
    int rt_dmax = 6, rt_graphs = 50;
    std::optional<std::uint64_t> rt_seed;
    std::string rt_out;
    rt->add_option("--d-max", rt_dmax, "Largest graph size")->capture_default_str();
    rt->add_option("--graphs", rt_graphs, "Graphs per size")->capture_default_str();
    rt->add_option("--seed", rt_seed, "RNG seed");
    rt->add_option("-o,--output", rt_out, "Optional JSON summary");
    rt->callback([&]() {
        const std::uint64_t seed = ensure_seed(rt_seed);
        const tc::RoundTripSummary summary = tc::exhaustive_roundtrip(rt_dmax, rt_graphs, seed);
        if (!rt_out.empty()) {
            json config{{"subcommand", "oracle roundtrip"}, {"d_max", rt_dmax}, {"graphs", rt_graphs},
                        {"seed", seed}};
            tc::io::write_json_file(rt_out, tc::io::roundtrip_to_json(summary, make_meta(global, config,
                                                                                         std::nullopt)));
        }
        const bool ok = summary.max_error <= 1e-10 && summary.support_exact;
        std::cout << (ok ? "PASS" : "FAIL") << " roundtrip: graphs=" << summary.total_graphs
                  << " max_error=" << summary.max_error << " support_exact=" << (summary.support_exact ? "yes" : "no")
                  << " worst(d=" << summary.worst.d << ", family=" << summary.worst.family
                  << ", alpha=" << summary.worst.alpha << ") seed=" << seed << "\n";
        if (!ok) throw tc::InfeasibleError("round-trip recovery exceeded tolerance");
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1; // flag/argument problems are validation errors
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const tc::InfeasibleError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const tc::EstimationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const tc::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
