#include <mmr/experiments.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include <mmr/clustering.hpp>
#include <mmr/io.hpp>
#include <mmr/jump_model.hpp>
#include <mmr/markov.hpp>
#include <mmr/reduction.hpp>
#include <mmr/rng.hpp>

namespace mmr {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

struct BudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class Deadline {
public:
    explicit Deadline(double seconds) : start_(Clock::now()), budget_(seconds) {}

    void check(const char* stage) const {
        if (elapsed() > budget_)
            throw BudgetExceeded(std::string("replication budget exceeded after ") + stage);
    }
    double elapsed() const {
        return std::chrono::duration<double>(Clock::now() - start_).count();
    }

private:
    Clock::time_point start_;
    double budget_;
};

// Labels drawn i.i.d. uniform and rejected until every cluster is hit, so
// each surjective assignment is equally likely.
Partition sample_uniform_partition(Index n, Index r, Rng& rng) {
    std::vector<int> assign(static_cast<std::size_t>(n));
    for (;;) {
        std::vector<char> seen(static_cast<std::size_t>(r), 0);
        Index hit = 0;
        for (auto& label : assign) {
            int k = static_cast<int>(rng.below(static_cast<std::uint64_t>(r)));
            label = k;
            if (!seen[static_cast<std::size_t>(k)]) {
                seen[static_cast<std::size_t>(k)] = 1;
                ++hit;
            }
        }
        if (hit == r) return Partition(r, assign);
    }
}

JumpModel sample_dynamics(Index modes, Index n_a, Index n_c, Rng& rng) {
    Matrix w(modes, n_a + n_c);
    for (Index k = 0; k < modes; ++k) {
        if (n_a > 0) {
            Vector poles(n_a);
            for (Index i = 0; i < n_a; ++i) {
                double p;
                do {
                    p = rng.uniform(-1.0, 1.0);
                } while (p <= -1.0 || p >= 1.0);
                poles(i) = p;
            }
            w.row(k).head(n_a) = poles_to_ar_coeffs(poles).transpose();
        }
        for (Index j = 0; j < n_c; ++j) w(k, n_a + j) = rng.uniform(-1.0, 1.0);
    }
    return JumpModel(n_a, n_c, std::move(w));
}

// One grid point of any scenario: sample the chain (optionally perturbed),
// sample or build the dynamics, simulate, run the pipeline, score.
// Replication seeds depend only on (master seed, replication index), so the
// same random instances recur at every grid point.
ReplicationRow run_one(const ExperimentConfig& cfg,
                       Index r,
                       long N,
                       double noise_max,
                       double alpha,  // <= 0: exact aggregatable chain
                       long grid_index,
                       double x,
                       long rep) {
    ReplicationRow row;
    row.grid_index = grid_index;
    row.x = x;
    row.replication = rep;
    Deadline deadline(cfg.budget_seconds);
    std::uint64_t rep_seed = derive_seed(cfg.rng_seed, static_cast<std::uint64_t>(rep));
    try {
        ExperimentConfig at = cfg;
        at.r = r;
        at.N = N;
        at.noise_max = noise_max;
        SampledInstance inst = sample_instance(at, alpha, rep_seed);
        row.delta_norm = inst.delta_norm;
        deadline.check("instance sampling");

        Trajectory traj =
            simulate(inst.model, inst.P, inst.pi0, N, inst.options, derive_seed(rep_seed, 6));
        deadline.check("simulation");

        PipelineResult out =
            run_pipeline(inst.model, traj, r, KMeansConfig{}, derive_seed(rep_seed, 7));
        deadline.check("pipeline");

        row.ce = clustering_error(inst.truth, out.reduced.partition);
        row.mr = misclustering_rate(inst.truth, out.reduced.partition);
        row.eta = out.estimate.mistake_rate.value_or(0.0);
        DistributionVector pi = stationary_distribution(inst.P);
        DistributionVector pi_tilde = reduced_stationary(out.reduced);
        row.stationary_l1_diff = (pi_tilde.probs() - pi.probs()).lpNorm<1>();
    } catch (const BudgetExceeded& e) {
        row.failed = true;
        row.failure = e.what();
    } catch (const InstabilityError& e) {
        row.failed = true;
        row.failure = e.what();
    } catch (const ConvergenceError& e) {
        row.failed = true;
        row.failure = e.what();
    } catch (const NumericalError& e) {
        row.failed = true;
        row.failure = e.what();
    }
    row.wall_seconds = deadline.elapsed();
    return row;
}

struct GridPoint {
    double x = 0.0;
    Index r = 0;
    long N = 0;
    double noise_max = 0.0;
    double alpha = 0.0;  // <= 0: unperturbed
};

ExperimentRecord drive(const ExperimentConfig& cfg,
                       const std::vector<GridPoint>& grid,
                       std::string x_label) {
    ExperimentRecord record;
    record.config = cfg;
    record.x_label = std::move(x_label);
    long points = static_cast<long>(grid.size());
    long reps = cfg.replications;
    record.rows.resize(static_cast<std::size_t>(points * reps));
    run_jobs(points * reps, cfg.threads, [&](long job) {
        long g = job / reps;
        long rep = job % reps;
        const GridPoint& pt = grid[static_cast<std::size_t>(g)];
        record.rows[static_cast<std::size_t>(job)] =
            run_one(cfg, pt.r, pt.N, pt.noise_max, pt.alpha, g, pt.x, rep);
    });
    record.aggregates.resize(grid.size());
    for (long g = 0; g < points; ++g) {
        GridAggregate& agg = record.aggregates[static_cast<std::size_t>(g)];
        agg.x = grid[static_cast<std::size_t>(g)].x;
        double ce = 0.0, pi_diff = 0.0, mr = 0.0;
        for (long rep = 0; rep < reps; ++rep) {
            const auto& row = record.rows[static_cast<std::size_t>(g * reps + rep)];
            if (row.failed) {
                ++agg.failed;
                continue;
            }
            ++agg.completed;
            ce += row.ce;
            pi_diff += row.stationary_l1_diff;
            mr += row.mr;
        }
        record.failed_count += agg.failed;
        if (agg.completed > 0) {
            agg.mean_ce = ce / static_cast<double>(agg.completed);
            agg.mean_stationary_l1_diff = pi_diff / static_cast<double>(agg.completed);
            agg.mean_mr = mr / static_cast<double>(agg.completed);
        } else {
            agg.mean_ce = agg.mean_stationary_l1_diff = agg.mean_mr =
                std::numeric_limits<double>::quiet_NaN();
        }
    }
    return record;
}

void require(bool ok, const std::string& message) {
    if (!ok) throw std::invalid_argument(message);
}

std::string sanitize_csv_field(std::string s) {
    for (auto& c : s)
        if (c == ',' || c == '\n') c = ';';
    return s;
}

}  // namespace

Scenario scenario_from_string(const std::string& name) {
    if (name == "synthetic-sweep") return Scenario::SyntheticSweep;
    if (name == "perturbation-sweep") return Scenario::PerturbationSweep;
    if (name == "robot") return Scenario::Robot;
    throw std::invalid_argument("unknown scenario: " + name);
}

std::string to_string(Scenario scenario) {
    switch (scenario) {
        case Scenario::SyntheticSweep: return "synthetic-sweep";
        case Scenario::PerturbationSweep: return "perturbation-sweep";
        case Scenario::Robot: return "robot";
    }
    throw std::invalid_argument("unknown scenario value");
}

void ExperimentConfig::validate() const {
    require(n >= 1, "n must be >= 1");
    require(r >= 1 && r <= n, "r must lie in [1, n]");
    require(n_a >= 0 && n_c >= 0 && n_a + n_c >= 1, "need at least one regressor lag");
    require(noise_max >= 0.0, "noise_max must be >= 0");
    require(noise_var >= 0.0, "noise_var must be >= 0");
    require(N >= 1, "N must be >= 1");
    require(replications >= 1, "replications must be >= 1");
    require(threads >= 1, "threads must be >= 1");
    require(budget_seconds >= 0.0, "budget_seconds must be >= 0");
    for (long v : N_grid) require(v >= 1, "N_grid entries must be >= 1");
    for (Index v : r_grid) require(v >= 1 && v <= n, "r_grid entries must lie in [1, n]");
    for (double v : noise_grid) require(v >= 0.0, "noise_grid entries must be >= 0");
    for (double v : alpha_grid) require(v > 0.0, "alpha_grid entries must be > 0");
    switch (scenario) {
        case Scenario::SyntheticSweep: {
            require(alpha_grid.empty(), "synthetic-sweep does not take alpha_grid");
            int active = (!N_grid.empty() ? 1 : 0) + (!r_grid.empty() ? 1 : 0) +
                         (!noise_grid.empty() ? 1 : 0);
            require(active <= 1, "synthetic-sweep sweeps one grid at a time");
            break;
        }
        case Scenario::PerturbationSweep:
            require(!alpha_grid.empty(), "perturbation-sweep requires alpha_grid");
            require(N_grid.empty() && r_grid.empty() && noise_grid.empty(),
                    "perturbation-sweep only sweeps alpha_grid");
            break;
        case Scenario::Robot:
            require(K > 0.0 && K < 2.0, "robot gain K must lie in (0, 2)");
            require(N_grid.empty() && r_grid.empty() && noise_grid.empty() &&
                        alpha_grid.empty(),
                    "robot runs a single grid point");
            break;
    }
}

ExperimentConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config parse error: ") + e.what());
    }
    require(j.is_object(), "config must be a JSON object");
    static const std::set<std::string> known = {
        "scenario", "n", "r", "n_a", "n_c", "noise_max", "K", "noise_var",
        "N", "N_grid", "r_grid", "noise_grid", "alpha_grid", "replications",
        "rng_seed", "output_dir", "threads", "budget_seconds"};
    for (const auto& item : j.items())
        require(known.count(item.key()) > 0, "unknown config key: " + item.key());

    ExperimentConfig cfg;
    try {
        if (j.contains("scenario"))
            cfg.scenario = scenario_from_string(j.at("scenario").get<std::string>());
        if (j.contains("n")) cfg.n = j.at("n").get<Index>();
        if (j.contains("r")) cfg.r = j.at("r").get<Index>();
        if (j.contains("n_a")) cfg.n_a = j.at("n_a").get<Index>();
        if (j.contains("n_c")) cfg.n_c = j.at("n_c").get<Index>();
        if (j.contains("noise_max")) cfg.noise_max = j.at("noise_max").get<double>();
        if (j.contains("K")) cfg.K = j.at("K").get<double>();
        if (j.contains("noise_var")) cfg.noise_var = j.at("noise_var").get<double>();
        if (j.contains("N")) cfg.N = j.at("N").get<long>();
        if (j.contains("N_grid")) cfg.N_grid = j.at("N_grid").get<std::vector<long>>();
        if (j.contains("r_grid")) cfg.r_grid = j.at("r_grid").get<std::vector<Index>>();
        if (j.contains("noise_grid"))
            cfg.noise_grid = j.at("noise_grid").get<std::vector<double>>();
        if (j.contains("alpha_grid"))
            cfg.alpha_grid = j.at("alpha_grid").get<std::vector<double>>();
        if (j.contains("replications")) cfg.replications = j.at("replications").get<long>();
        if (j.contains("rng_seed")) cfg.rng_seed = j.at("rng_seed").get<std::uint64_t>();
        if (j.contains("output_dir"))
            cfg.output_dir = fs::path(j.at("output_dir").get<std::string>());
        if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
        if (j.contains("budget_seconds"))
            cfg.budget_seconds = j.at("budget_seconds").get<double>();
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config field error: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw std::invalid_argument("cannot open config file: " + file.string());
    std::ostringstream text;
    text << in.rdbuf();
    return config_from_json(text.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    j["scenario"] = to_string(cfg.scenario);
    j["n"] = cfg.n;
    j["r"] = cfg.r;
    j["n_a"] = cfg.n_a;
    j["n_c"] = cfg.n_c;
    j["noise_max"] = cfg.noise_max;
    j["K"] = cfg.K;
    j["noise_var"] = cfg.noise_var;
    j["N"] = cfg.N;
    j["N_grid"] = cfg.N_grid;
    j["r_grid"] = cfg.r_grid;
    j["noise_grid"] = cfg.noise_grid;
    j["alpha_grid"] = cfg.alpha_grid;
    j["replications"] = cfg.replications;
    j["rng_seed"] = cfg.rng_seed;
    j["output_dir"] = cfg.output_dir.string();
    j["threads"] = cfg.threads;
    j["budget_seconds"] = cfg.budget_seconds;
    return j.dump(2) + "\n";
}

SampledInstance sample_instance(const ExperimentConfig& cfg,
                                double alpha,
                                std::uint64_t rep_seed) {
    Rng partition_rng(derive_seed(rep_seed, 1));
    Partition truth = sample_uniform_partition(cfg.n, cfg.r, partition_rng);
    Matrix cluster_rows =
        sample_dirichlet_rows(Vector::Ones(cfg.n), cfg.r, derive_seed(rep_seed, 2));
    StochasticMatrix P = build_aggregatable(truth, cluster_rows);
    double delta_norm = 0.0;
    if (alpha > 0.0) {
        auto perturbed = sample_perturbed(P, truth, alpha, derive_seed(rep_seed, 3));
        P = perturbed.P;
        delta_norm = perturbed.delta_spectral_norm;
    }
    Matrix pi0_row = sample_dirichlet_rows(Vector::Ones(cfg.n), 1, derive_seed(rep_seed, 4));
    DistributionVector pi0{Vector(pi0_row.row(0).transpose())};

    SimulateOptions opt;
    if (cfg.scenario == Scenario::Robot) {
        Vector positions(cfg.n);
        for (Index i = 0; i < cfg.n; ++i) positions(i) = static_cast<double>(i + 1);
        opt.input = InputKind::ConstantOne;
        opt.noise = NoiseKind::Gaussian;
        opt.noise_param = std::sqrt(cfg.noise_var);
        return {robot_model(cfg.n, positions, cfg.K), std::move(P), std::move(truth),
                std::move(pi0), delta_norm, opt};
    }
    Rng dynamics_rng(derive_seed(rep_seed, 5));
    opt.input = InputKind::GaussianUnit;
    opt.noise = NoiseKind::UniformBounded;
    opt.noise_param = cfg.noise_max;
    return {sample_dynamics(cfg.n, cfg.n_a, cfg.n_c, dynamics_rng), std::move(P),
            std::move(truth), std::move(pi0), delta_norm, opt};
}

ExperimentRecord run_synthetic_sweep(const ExperimentConfig& cfg) {
    require(cfg.scenario == Scenario::SyntheticSweep, "config scenario is not synthetic-sweep");
    cfg.validate();
    std::vector<GridPoint> grid;
    std::string x_label;
    if (!cfg.N_grid.empty()) {
        x_label = "N";
        for (long N : cfg.N_grid)
            grid.push_back({static_cast<double>(N), cfg.r, N, cfg.noise_max, 0.0});
    } else if (!cfg.r_grid.empty()) {
        x_label = "r";
        for (Index r : cfg.r_grid)
            grid.push_back({static_cast<double>(r), r, cfg.N, cfg.noise_max, 0.0});
    } else if (!cfg.noise_grid.empty()) {
        x_label = "n_max";
        for (double noise : cfg.noise_grid) grid.push_back({noise, cfg.r, cfg.N, noise, 0.0});
    } else {
        x_label = "N";
        grid.push_back({static_cast<double>(cfg.N), cfg.r, cfg.N, cfg.noise_max, 0.0});
    }
    return drive(cfg, grid, x_label);
}

ExperimentRecord run_perturbation_sweep(const ExperimentConfig& cfg) {
    require(cfg.scenario == Scenario::PerturbationSweep,
            "config scenario is not perturbation-sweep");
    cfg.validate();
    std::vector<GridPoint> grid;
    for (double alpha : cfg.alpha_grid)
        grid.push_back({alpha, cfg.r, cfg.N, cfg.noise_max, alpha});
    // Scatter rows are plotted against the realized ||Delta||; aggregate x
    // stays the Dirichlet concentration alpha of the grid point.
    return drive(cfg, grid, "delta_norm");
}

ExperimentRecord run_robot(const ExperimentConfig& cfg) {
    require(cfg.scenario == Scenario::Robot, "config scenario is not robot");
    cfg.validate();
    std::vector<GridPoint> grid = {
        {static_cast<double>(cfg.N), cfg.r, cfg.N, 0.0, 0.0}};
    return drive(cfg, grid, "N");
}

ExperimentRecord run_experiment(const ExperimentConfig& cfg) {
    switch (cfg.scenario) {
        case Scenario::SyntheticSweep: return run_synthetic_sweep(cfg);
        case Scenario::PerturbationSweep: return run_perturbation_sweep(cfg);
        case Scenario::Robot: return run_robot(cfg);
    }
    throw std::invalid_argument("unknown scenario value");
}

std::vector<fs::path> emit_plot_data(const ExperimentRecord& record, PlotKind kind) {
    require(!record.rows.empty(), "record is empty");
    const fs::path& dir = record.config.output_dir;
    require(!dir.empty(), "config output_dir is not set");
    fs::create_directories(dir);
    std::string prefix = to_string(record.config.scenario);
    std::vector<fs::path> written;

    auto open = [&](const std::string& suffix) {
        fs::path file = dir / (prefix + "_" + suffix);
        std::ofstream out(file);
        if (!out) throw std::runtime_error("cannot write " + file.string());
        written.push_back(file);
        return out;
    };

    struct Metric {
        const char* name;
        double ReplicationRow::*row_field;
        double GridAggregate::*mean_field;
    };
    const Metric metrics[] = {
        {"ce", &ReplicationRow::ce, &GridAggregate::mean_ce},
        {"stationary_l1", &ReplicationRow::stationary_l1_diff,
         &GridAggregate::mean_stationary_l1_diff},
    };
    bool scatter_on_delta = record.x_label == "delta_norm";
    for (const Metric& metric : metrics) {
        auto out = open(std::string(metric.name) + ".csv");
        if (kind == PlotKind::Line) {
            out << record.x_label << ',' << metric.name << "_mean\n";
            for (const auto& agg : record.aggregates)
                out << format_double(agg.x) << ',' << format_double(agg.*(metric.mean_field))
                    << '\n';
        } else {
            out << record.x_label << ',' << metric.name << '\n';
            for (const auto& row : record.rows) {
                if (row.failed) continue;
                double x = scatter_on_delta ? row.delta_norm : row.x;
                out << format_double(x) << ',' << format_double(row.*(metric.row_field))
                    << '\n';
            }
        }
    }

    {
        auto out = open("rows.csv");
        out << "grid_index,x,replication,failed,ce,stationary_l1_diff,mr,eta,"
               "delta_norm,wall_seconds,failure\n";
        for (const auto& row : record.rows) {
            out << row.grid_index << ',' << format_double(row.x) << ',' << row.replication
                << ',' << (row.failed ? 1 : 0) << ',' << format_double(row.ce) << ','
                << format_double(row.stationary_l1_diff) << ',' << format_double(row.mr)
                << ',' << format_double(row.eta) << ',' << format_double(row.delta_norm)
                << ',' << format_double(row.wall_seconds) << ','
                << sanitize_csv_field(row.failure) << '\n';
        }
    }
    {
        auto out = open("config.json");
        out << config_to_json(record.config);
    }
    return written;
}

void run_jobs(long jobs, int threads, const std::function<void(long)>& fn) {
    if (jobs <= 0) return;
    if (threads < 1) throw std::invalid_argument("threads must be >= 1");
    if (threads == 1 || jobs == 1) {
        for (long job = 0; job < jobs; ++job) fn(job);
        return;
    }
    std::atomic<long> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    auto worker = [&] {
        for (;;) {
            long job = next.fetch_add(1);
            if (job >= jobs) return;
            try {
                fn(job);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    auto workers = static_cast<std::size_t>(std::min<long>(threads, jobs));
    pool.reserve(workers);
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace mmr
