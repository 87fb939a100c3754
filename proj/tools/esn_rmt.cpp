// esn-rmt: analytic risk, Monte-Carlo simulation, experiment sweeps, plots.
//
// Exit codes: 0 success, 1 runtime or convergence failure, 2 usage or config error.

#include "esn_rmt/config.hpp"
#include "esn_rmt/experiments.hpp"
#include "esn_rmt/svg.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace esn_rmt;

namespace {

constexpr const char* kVersion = "1.0.0";

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ModelFlags {
    bool ridge = false;
    bool esn = false;
    std::optional<double> phi;
    bool isotropic = false;
    std::optional<double> ar1;
    std::optional<double> power_law;
    Index T = 100;
    Index N = 200;
    std::optional<Index> n;  // reservoir width
    double sigma2 = 1.0;
    double theta_norm = 1.0;
    double rho = 0.9;
    double lambda = 1.0;
    bool gaussian = false;
    std::uint64_t seed = 0;
};

void add_model_flags(CLI::App& cmd, ModelFlags& f) {
    auto* ridge = cmd.add_flag("--ridge", f.ridge, "identity features (plain ridge regression)");
    auto* esn = cmd.add_flag("--esn", f.esn, "linear ESN features");
    ridge->excludes(esn);
    cmd.add_option("--phi", f.phi, "ESN leak factor in (0, 1] (default 0.9)");
    auto* iso = cmd.add_flag("--isotropic", f.isotropic, "Sigma_u = I (default)");
    auto* ar = cmd.add_option("--ar1", f.ar1, "Toeplitz AR(1) covariance c^|i-j|, c in [0, 1)");
    auto* pl = cmd.add_option("--power-law", f.power_law, "diagonal covariance (i+1)^-exponent");
    iso->excludes(ar, pl);
    ar->excludes(pl);
    cmd.add_option("-T", f.T, "input window length")->check(CLI::PositiveNumber);
    cmd.add_option("-N", f.N, "training samples")->check(CLI::PositiveNumber);
    cmd.add_option("--n", f.n, "reservoir width (default 2T)")->check(CLI::PositiveNumber);
    cmd.add_option("--sigma2", f.sigma2, "label noise variance")->check(CLI::NonNegativeNumber);
    cmd.add_option("--theta-norm", f.theta_norm, "teacher norm")->check(CLI::NonNegativeNumber);
    cmd.add_option("--rho", f.rho, "teacher memory decay in (0, 1]");
    cmd.add_option("--lambda", f.lambda, "ridge penalty (> 0)");
    cmd.add_flag("--gaussian", f.gaussian, "Gaussian reservoir instead of scaled orthogonal");
    cmd.add_option("--seed", f.seed, "random seed");
}

void check_model_flags(const ModelFlags& f) {
    if (f.ridge && f.phi) throw UsageError("--phi only applies to --esn");
    if (f.ridge && f.n) throw UsageError("--n only applies to --esn");
    if (f.phi && !(*f.phi > 0.0 && *f.phi <= 1.0)) throw UsageError("--phi must lie in (0, 1]");
    if (!(f.lambda > 0.0)) throw UsageError("--lambda must be > 0");
    if (!(f.rho > 0.0 && f.rho <= 1.0)) throw UsageError("--rho must lie in (0, 1]");
    if (f.ar1 && !(*f.ar1 >= 0.0 && *f.ar1 < 1.0)) throw UsageError("--ar1 must lie in [0, 1)");
}

CovarianceSpec covariance(const ModelFlags& f) {
    if (f.ar1) return CovarianceSpec::ar1(*f.ar1, f.T);
    if (f.power_law) return CovarianceSpec::power_law(*f.power_law, f.T);
    return CovarianceSpec::isotropic(f.T);
}

Vector teacher(const ModelFlags& f) { return make_memory_teacher(f.T, f.rho, true) * f.theta_norm; }

double phi_of(const ModelFlags& f) { return f.phi.value_or(0.9); }

Reservoir reservoir(const ModelFlags& f) {
    return generate_reservoir(f.n.value_or(2 * f.T), phi_of(f),
                              f.gaussian ? ReservoirKind::ScaledGaussian : ReservoirKind::ScaledOrthogonal,
                              derive_seed(f.seed, Stream::Reservoir, 0));
}

struct Analytic {
    RiskDecomposition risk;
    double alpha = 0.0;
    double delta = 0.0;
};

/// Ridge: general risk on Sigma_u. ESN without --n: leak-kernel spectral
/// form. ESN with --n: the realized statistics of the seeded reservoir.
Analytic analytic(const ModelFlags& f) {
    const Matrix su = materialize_covariance(covariance(f));
    const Vector theta = teacher(f);
    if (f.esn && f.n) {
        const auto stats = esn_second_order_stats(reservoir(f), su);
        const auto fp = solve_fixed_point(stats.sigma_z(), f.N, f.lambda);
        return {general_risk(stats, theta, f.sigma2, fp), fp.alpha, fp.delta};
    }
    if (f.esn) {
        auto [risk, sr] = spectral_esn_risk(su, theta, f.sigma2, phi_of(f), f.lambda, f.N);
        return {risk, sr.alpha, sr.delta};
    }
    const auto fp = solve_fixed_point(su, f.N, f.lambda);
    return {general_risk(SecondOrderStats::ridge(su), theta, f.sigma2, fp), fp.alpha, fp.delta};
}

int cmd_theory(const ModelFlags& f, bool csv) {
    check_model_flags(f);
    const Analytic a = analytic(f);
    const char* model = f.esn ? "esn" : "ridge";
    if (csv) {
        std::cout << "model,T,N,lambda,bias2,variance,noise,total,alpha,delta\n"
                  << model << ',' << f.T << ',' << f.N << ',' << format_double(f.lambda) << ','
                  << format_double(a.risk.bias2) << ',' << format_double(a.risk.variance) << ','
                  << format_double(a.risk.noise) << ',' << format_double(a.risk.total()) << ','
                  << format_double(a.alpha) << ',' << format_double(a.delta) << '\n';
        return 0;
    }
    std::printf("model     %s\n", model);
    std::printf("bias2     %.10g\n", a.risk.bias2);
    std::printf("variance  %.10g\n", a.risk.variance);
    std::printf("noise     %.10g\n", a.risk.noise);
    std::printf("total     %.10g\n", a.risk.total());
    std::printf("alpha     %.10g\n", a.alpha);
    std::printf("delta     %.10g\n", a.delta);
    return 0;
}

int cmd_simulate(ModelFlags f, Index M, Index trials, bool resample, std::size_t workers) {
    check_model_flags(f);
    if (f.ridge && resample) throw UsageError("--resample only applies to --esn");
    if (M < 100) throw UsageError("--M must be >= 100");
    if (trials < 1) throw UsageError("--trials must be >= 1");
    const auto cov = covariance(f);
    const TeacherSpec t(teacher(f), f.sigma2);
    EmpiricalRisk er;
    if (f.esn) {
        const Reservoir res = reservoir(f);
        er = empirical_risk(ProblemDims(f.T, res.n(), f.N), cov, t, LinearEsn{res, resample}, f.lambda,
                            {M, trials, f.seed, workers});
        // A fixed reservoir is compared with its own statistics; a resampled one with the leak-kernel limit.
        if (!resample) f.n = res.n();
    } else {
        er = empirical_risk(ProblemDims::ridge(f.T, f.N), cov, t, RidgeIdentity{}, f.lambda,
                            {M, trials, f.seed, workers});
    }
    const Analytic a = analytic(f);
    const double gap = (er.estimate - a.risk.total()) / a.risk.total();
    std::printf("model        %s\n", f.esn ? "esn" : "ridge");
    std::printf("simulated    %.6f +- %.6f  (M=%lld, trials=%lld)\n", er.estimate, er.std_error,
                static_cast<long long>(er.M), static_cast<long long>(er.trials));
    std::printf("analytic     %.6f  (alpha %.6f)\n", a.risk.total(), a.alpha);
    std::printf("relative gap %+.4f\n", gap);
    return 0;
}

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + p.string());
}

int cmd_experiment(const std::string& which, const std::string& config_path, const std::string& out_dir,
                   std::optional<std::uint64_t> seed, std::optional<std::size_t> workers) {
    const ExperimentKind kind = parse_experiment_kind(which);
    ExperimentConfig cfg;
    if (config_path.empty()) {
        cfg = config_from_json(json{{"experiment", which}});
    } else {
        cfg = load_config(config_path);
        if (cfg.experiment != kind)
            throw ConfigError("config is for '" + std::string(to_string(cfg.experiment)) + "', not '" + which + "'");
    }
    if (seed) cfg.seed = *seed;
    if (workers) cfg.workers = *workers;

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir)) throw std::runtime_error("cannot create output directory " + out_dir);

    const std::string started = utc_now();
    Table table;
    json annotations = json::object();
    switch (kind) {
        case ExperimentKind::DoubleDescent: table = double_descent_table(run_double_descent(cfg), cfg.mc.enabled); break;
        case ExperimentKind::MemoryGrid: table = memory_grid_table(run_memory_grid(cfg), cfg.mc.enabled); break;
        case ExperimentKind::LambdaSweep: {
            const auto res = run_lambda_sweep(cfg);
            table = lambda_sweep_table(res, cfg.mc.enabled);
            annotations["lambda_star"] = res.lambda_star;
            for (const auto& [tag, l] : res.analytic_argmin) annotations["analytic_argmin"][to_string(tag)] = l;
            for (const auto& [tag, l] : res.empirical_argmin) annotations["empirical_argmin"][to_string(tag)] = l;
            break;
        }
    }

    std::ostringstream csv;
    write_csv(csv, table);
    const fs::path dir(out_dir);
    write_file(dir / "results.csv", csv.str());
    write_file(dir / "plot.svg", svg::plot_table(table));

    json manifest;
    manifest["tool"] = "esn-rmt";
    manifest["tool_version"] = kVersion;
    manifest["config"] = config_to_json(cfg);
    manifest["config_digest"] = config_digest(cfg);
    manifest["seed"] = cfg.seed;
    manifest["started_at"] = started;
    manifest["finished_at"] = utc_now();
    manifest["outputs"] = {"results.csv", "plot.svg", "manifest.json"};
    manifest["rows"] = table.rows.size();
    if (!annotations.empty()) manifest["annotations"] = annotations;
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");

    std::printf("wrote %zu rows to %s\n", table.rows.size(), (dir / "results.csv").c_str());
    if (annotations.contains("lambda_star")) std::printf("annotations: %s\n", annotations.dump().c_str());
    return 0;
}

int cmd_plot(const std::string& csv_path, std::string out) {
    std::ifstream in(csv_path);
    if (!in) throw ConfigError("cannot open " + csv_path);
    const Table t = parse_csv(in);
    if (out.empty()) out = (fs::path(csv_path).parent_path() / "plot.svg").string();
    write_file(out, svg::plot_table(t));
    std::printf("wrote %s\n", out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Echo state network and ridge risk: theory, simulation, sweeps"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    ModelFlags theory_flags;
    bool csv = false;
    auto* theory = app.add_subcommand("theory", "analytic bias, variance and total risk");
    add_model_flags(*theory, theory_flags);
    theory->add_flag("--csv", csv, "print one CSV row instead of text");

    ModelFlags sim_flags;
    Index M = 2000, trials = 20;
    bool resample = false;
    std::size_t sim_workers = 0;
    auto* simulate = app.add_subcommand("simulate", "Monte-Carlo risk next to the analytic value");
    add_model_flags(*simulate, sim_flags);
    simulate->add_option("--M", M, "test samples per trial");
    simulate->add_option("--trials", trials, "independent trials");
    simulate->add_flag("--resample", resample, "draw a new reservoir each trial");
    simulate->add_option("--workers", sim_workers, "worker threads (0: ESN_RMT_THREADS or all cores)");

    std::string which, config_path, out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    auto* experiment = app.add_subcommand("experiment", "run a sweep, write results.csv, plot.svg, manifest.json");
    experiment->add_option("kind", which, "double-descent | memory-grid | lambda-sweep")
        ->required()
        ->check(CLI::IsMember({"double-descent", "memory-grid", "lambda-sweep"}));
    experiment->add_option("--config", config_path, "JSON config (defaults if omitted)");
    experiment->add_option("--out", out_dir, "output directory");
    experiment->add_option("--seed", seed, "override the config seed");
    experiment->add_option("--workers", workers, "worker threads (0: ESN_RMT_THREADS or all cores)");

    std::string csv_path, plot_out;
    auto* plot = app.add_subcommand("plot", "re-render plot.svg from a results.csv");
    plot->add_option("results", csv_path, "results.csv")->required();
    plot->add_option("--out", plot_out, "SVG path (default: next to the CSV)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*theory) return cmd_theory(theory_flags, csv);
        if (*simulate) return cmd_simulate(sim_flags, M, trials, resample, sim_workers);
        if (*experiment) return cmd_experiment(which, config_path, out_dir, seed, workers);
        if (*plot) return cmd_plot(csv_path, plot_out);
    } catch (const InterpolationThresholdError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
