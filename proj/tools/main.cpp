// Command-line front end: simulate switched ARX trajectories, run the
// reduction pipeline stage by stage, evaluate error bounds, and drive the
// experiment scenarios.  Exit codes: 0 success, 2 configuration or argument
// error, 3 numerical failure.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include <mmr/clustering.hpp>
#include <mmr/estimation.hpp>
#include <mmr/experiments.hpp>
#include <mmr/io.hpp>
#include <mmr/jump_model.hpp>
#include <mmr/markov.hpp>
#include <mmr/reduction.hpp>
#include <mmr/rng.hpp>
#include <mmr/spectral.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path ensure_dir(const fs::path& dir) {
    if (dir.empty()) throw std::invalid_argument("--out directory is required");
    fs::create_directories(dir);
    return dir;
}

void note_written(const fs::path& file) { std::cout << "wrote " << file.string() << '\n'; }

struct SimulateArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    fs::path out;
};

void run_simulate(const SimulateArgs& args) {
    auto cfg = mmr::load_config(args.config);
    if (args.seed) cfg.rng_seed = *args.seed;
    auto dir = ensure_dir(args.out);

    double alpha = cfg.alpha_grid.empty() ? 0.0 : cfg.alpha_grid.front();
    std::uint64_t rep_seed = mmr::derive_seed(cfg.rng_seed, 0);
    auto inst = mmr::sample_instance(cfg, alpha, rep_seed);
    auto traj = mmr::simulate(inst.model, inst.P, inst.pi0, cfg.N, inst.options,
                              mmr::derive_seed(rep_seed, 6));

    mmr::save_model(dir / "model.csv", inst.model);
    mmr::save_stochastic(dir / "chain.csv", inst.P);
    mmr::save_partition(dir / "partition.csv", inst.truth);
    mmr::save_distribution(dir / "pi0.csv", inst.pi0);
    mmr::save_trajectory(dir / "trajectory.csv", traj, inst.model.n_a, inst.model.n_c);
    for (const char* name : {"model.csv", "chain.csv", "partition.csv", "pi0.csv",
                             "trajectory.csv"})
        note_written(dir / name);
}

struct EstimateArgs {
    std::string model;
    std::string traj;
    fs::path out;
};

void run_estimate(const EstimateArgs& args) {
    auto model = mmr::load_model(args.model);
    auto loaded = mmr::load_trajectory(args.traj);
    if (loaded.n_a != model.n_a || loaded.n_c != model.n_c)
        throw std::invalid_argument("trajectory lag orders do not match the model");
    auto dir = ensure_dir(args.out);

    auto estimate = mmr::estimate_modes(model, loaded.traj);
    auto counts = mmr::count_transitions(estimate.modes, model.modes());
    auto p_hat = mmr::empirical_matrix(counts);

    mmr::Trajectory annotated = loaded.traj;
    annotated.modes = estimate.modes;
    mmr::save_trajectory(dir / "estimated.csv", annotated, model.n_a, model.n_c);
    mmr::save_counts(dir / "counts.csv", counts);
    mmr::save_stochastic(dir / "p_hat.csv", p_hat);

    json summary;
    summary["states"] = model.modes();
    summary["steps"] = counts.total_steps;
    if (estimate.mistake_count) summary["mistake_count"] = *estimate.mistake_count;
    if (estimate.mistake_rate) summary["mistake_rate"] = *estimate.mistake_rate;
    std::ofstream(dir / "estimate.json") << summary.dump(2) << '\n';
    for (const char* name : {"estimated.csv", "counts.csv", "p_hat.csv", "estimate.json"})
        note_written(dir / name);
}

struct ClusterArgs {
    std::string p_hat;
    mmr::Index r = 0;
    std::uint64_t seed = 0;
    fs::path out;
};

void run_cluster(const ClusterArgs& args) {
    auto p_hat = mmr::load_stochastic(args.p_hat);
    if (args.r < 1 || args.r > p_hat.size())
        throw std::invalid_argument("--clusters must lie in [1, n]");
    auto dir = ensure_dir(args.out);

    auto basis = mmr::truncate_svd(p_hat.matrix(), args.r);
    auto result = mmr::kmeans(basis.U, args.r, mmr::KMeansConfig{}, args.seed);

    mmr::save_partition(dir / "partition.csv", result.partition);
    json summary;
    summary["clusters"] = args.r;
    summary["cost"] = result.cost;
    summary["restarts_used"] = result.restarts_used;
    for (mmr::Index i = 0; i < basis.sigma.size(); ++i)
        summary["sigma"].push_back(basis.sigma(i));
    std::ofstream(dir / "cluster.json") << summary.dump(2) << '\n';
    note_written(dir / "partition.csv");
    note_written(dir / "cluster.json");
}

struct ReduceArgs {
    std::string counts;
    std::string partition;
    std::optional<double> eta;
    fs::path out;
};

void run_reduce(const ReduceArgs& args) {
    auto counts = mmr::load_counts(args.counts);
    auto partition = mmr::load_partition(args.partition);
    auto dir = ensure_dir(args.out);

    auto reduced = mmr::aggregate_reestimate(counts, partition, args.eta);
    mmr::save_reduced(dir / "reduced_rows.csv", dir / "reduced_partition.csv", reduced);
    mmr::save_stochastic(dir / "p_tilde.csv", reduced.dense);
    mmr::save_distribution(dir / "pi_tilde.csv", mmr::reduced_stationary(reduced));
    for (const char* name :
         {"reduced_rows.csv", "reduced_partition.csv", "p_tilde.csv", "pi_tilde.csv"})
        note_written(dir / name);
}

struct BoundsArgs {
    std::string config;
    fs::path out;
};

mmr::BoundReport bounds_from_config(const json& j, const fs::path& base) {
    auto path_of = [&](const std::string& key) {
        fs::path p = j.at(key).get<std::string>();
        return p.is_absolute() ? p : base / p;
    };
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "stationary-diff") {
        auto P = mmr::load_stochastic(path_of("p"));
        auto P_tilde = mmr::load_stochastic(path_of("p_tilde"));
        return mmr::bound_stationary_diff(P, P_tilde);
    }
    if (kind == "mr") {
        mmr::MrBoundInputs in;
        in.n = j.at("n").get<mmr::Index>();
        in.r = j.at("r").get<mmr::Index>();
        in.eps1 = j.at("eps1").get<double>();
        in.eps2 = j.at("eps2").get<double>();
        in.eta = j.at("eta").get<double>();
        in.delta_norm = j.at("delta_norm").get<double>();
        in.sigma1_pbar = j.at("sigma1_pbar").get<double>();
        in.sigma_r_pbar = j.at("sigma_r_pbar").get<double>();
        in.pi_min = j.at("pi_min").get<double>();
        in.pi_max = j.at("pi_max").get<double>();
        in.tau_star = j.at("tau_star").get<double>();
        in.omega_largest = j.at("omega_largest").get<double>();
        in.omega_smallest = j.at("omega_smallest").get<double>();
        in.N = j.at("N").get<long>();
        return mmr::bound_mr(in);
    }
    if (kind == "p-diff") {
        mmr::PDiffBoundInputs in;
        in.n = j.at("n").get<mmr::Index>();
        in.pi_min = j.at("pi_min").get<double>();
        in.sigma1_p = j.at("sigma1_p").get<double>();
        in.eps2 = j.at("eps2").get<double>();
        in.eta = j.at("eta").get<double>();
        in.delta_inf_norm = j.at("delta_inf_norm").get<double>();
        in.mr = j.at("mr").get<double>();
        return mmr::bound_p_diff(in);
    }
    throw std::invalid_argument("unknown bound kind: " + kind);
}

void run_bounds(const BoundsArgs& args) {
    std::ifstream in(args.config);
    if (!in) throw std::invalid_argument("cannot open config file: " + args.config);
    json j;
    mmr::BoundReport report = [&] {
        try {
            in >> j;
            return bounds_from_config(j, fs::path(args.config).parent_path());
        } catch (const json::exception& e) {
            throw std::invalid_argument(std::string("bounds config error: ") + e.what());
        }
    }();
    auto dir = ensure_dir(args.out);
    mmr::save_bound_report(dir / "report.json", report);
    std::cout << mmr::bound_report_to_json(report).dump(2) << '\n';
    note_written(dir / "report.json");
}

struct ExperimentArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<fs::path> out;
    std::optional<int> threads;
};

void run_experiment_cmd(const ExperimentArgs& args) {
    auto cfg = mmr::load_config(args.config);
    if (args.seed) cfg.rng_seed = *args.seed;
    if (args.out) cfg.output_dir = *args.out;
    if (args.threads) cfg.threads = *args.threads;
    cfg.validate();

    auto record = mmr::run_experiment(cfg);
    std::cout << "scenario=" << mmr::to_string(cfg.scenario) << " rows=" << record.rows.size()
              << " failed=" << record.failed_count << '\n';
    for (const auto& agg : record.aggregates)
        std::cout << record.x_label << '=' << mmr::format_double(agg.x)
                  << " completed=" << agg.completed << " failed=" << agg.failed
                  << " mean_ce=" << mmr::format_double(agg.mean_ce)
                  << " mean_stationary_l1=" << mmr::format_double(agg.mean_stationary_l1_diff)
                  << '\n';
    if (!cfg.output_dir.empty()) {
        auto kind = cfg.scenario == mmr::Scenario::PerturbationSweep ? mmr::PlotKind::Scatter
                                                                     : mmr::PlotKind::Line;
        for (const auto& file : mmr::emit_plot_data(record, kind)) note_written(file);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Markov jump-system mode estimation and model reduction"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Sample an instance and a trajectory");
    sim_cmd->add_option("--config", sim.config, "experiment config JSON")->required();
    sim_cmd->add_option("--seed", sim.seed, "master seed override");
    sim_cmd->add_option("--out", sim.out, "output directory")->required();

    EstimateArgs est;
    auto* est_cmd =
        app.add_subcommand("estimate", "Estimate modes and the empirical transition matrix");
    est_cmd->add_option("--model", est.model, "model CSV")->required();
    est_cmd->add_option("--traj", est.traj, "trajectory CSV")->required();
    est_cmd->add_option("--out", est.out, "output directory")->required();

    ClusterArgs clu;
    auto* clu_cmd = app.add_subcommand("cluster", "Cluster states from the empirical matrix");
    clu_cmd->add_option("--p-hat", clu.p_hat, "empirical matrix CSV")->required();
    clu_cmd->add_option("--clusters", clu.r, "number of clusters")->required();
    clu_cmd->add_option("--seed", clu.seed, "k-means seed");
    clu_cmd->add_option("--out", clu.out, "output directory")->required();

    ReduceArgs red;
    auto* red_cmd = app.add_subcommand("reduce", "Pool counts by cluster and re-estimate");
    red_cmd->add_option("--counts", red.counts, "transition counts CSV")->required();
    red_cmd->add_option("--partition", red.partition, "partition CSV")->required();
    red_cmd->add_option("--eta", red.eta, "mode-mistake rate to record");
    red_cmd->add_option("--out", red.out, "output directory")->required();

    BoundsArgs bnd;
    auto* bnd_cmd = app.add_subcommand("bounds", "Evaluate an error bound described by a JSON file");
    bnd_cmd->add_option("--config", bnd.config, "bound description JSON")->required();
    bnd_cmd->add_option("--out", bnd.out, "output directory")->required();

    ExperimentArgs exp;
    auto* exp_cmd = app.add_subcommand("experiment", "Run a full experiment scenario");
    exp_cmd->add_option("--config", exp.config, "experiment config JSON")->required();
    exp_cmd->add_option("--seed", exp.seed, "master seed override");
    exp_cmd->add_option("--out", exp.out, "output directory override");
    exp_cmd->add_option("--threads", exp.threads, "worker count override");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (sim_cmd->parsed()) run_simulate(sim);
        if (est_cmd->parsed()) run_estimate(est);
        if (clu_cmd->parsed()) run_cluster(clu);
        if (red_cmd->parsed()) run_reduce(red);
        if (bnd_cmd->parsed()) run_bounds(bnd);
        if (exp_cmd->parsed()) run_experiment_cmd(exp);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const mmr::ConvergenceError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const mmr::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const mmr::InstabilityError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
