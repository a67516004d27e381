#include "cosym/cli.hpp"

#include "cosym/errors.hpp"
#include "cosym/scenario.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace cosym {

namespace {

namespace fs = std::filesystem;

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitInvalidConfig = 2;
constexpr int kExitIntegrationFailure = 3;
constexpr int kExitSingularLegendre = 4;

struct CommonOptions {
    std::string out_dir;
    double tolerance = 0.0; // 0: use the scenario's own
    unsigned seed = 0;
    unsigned jobs = 1;
};

fs::path resolve_output(const CommonOptions& opts, const std::string& name) {
    if (opts.out_dir.empty()) return fs::path(name);
    return fs::path(opts.out_dir) / name;
}

bool ensure_output_dir(const CommonOptions& opts, std::ostream& err) {
    if (opts.out_dir.empty()) return true;
    std::error_code ec;
    fs::create_directories(opts.out_dir, ec);
    if (ec) err << "error file-io: cannot create output directory '" << opts.out_dir << "'\n";
    return !ec;
}

int validate_one(const std::string& path, std::ostream& out) {
    const ScenarioLoad load = load_scenario(path);
    if (!load.ok()) {
        for (const auto& d : load.errors) out << d.to_line() << "\n";
        out << path << ": invalid (" << load.errors.size() << " finding"
            << (load.errors.size() == 1 ? "" : "s") << ")\n";
        return kExitInvalidConfig;
    }
    out << path << ": ok\n";
    return kExitPass;
}

int simulate_one(const std::string& path, const CommonOptions& opts, std::ostream& out) {
    const ScenarioLoad load = load_scenario(path);
    if (!load.ok()) {
        for (const auto& d : load.errors) out << d.to_line() << "\n";
        return kExitInvalidConfig;
    }
    const ScenarioConfig& cfg = *load.config;

    Trajectory traj;
    RunSummary summary;
    summary.seed = opts.seed;
    summary.status = "completed";
    int exit_code = kExitPass;
    try {
        if (cfg.lagrangian_side)
            integrate_into(traj, *cfg.lagrangian, cfg.initial_state, cfg.integrator);
        else
            integrate_into(traj, *cfg.system, cfg.initial_state, cfg.integrator);
        if (traj.halted_early) {
            summary.status = "halted_early";
            summary.detail = traj.halt_reason;
            exit_code = kExitIntegrationFailure;
        }
    } catch (const SingularLegendre& e) {
        summary.status = "error";
        summary.detail = e.what();
        exit_code = kExitSingularLegendre;
    } catch (const Error& e) {
        summary.status = "error";
        summary.detail = e.what();
        exit_code = kExitIntegrationFailure;
    }

    InvariantReport report;
    if (!traj.times.empty()) {
        if (cfg.lagrangian_side)
            report = check_invariants(traj, *cfg.lagrangian, cfg.tolerances);
        else
            report = check_invariants(traj, *cfg.system, cfg.tolerances);
    }
    if (exit_code == kExitPass && !report.pass()) exit_code = kExitFail;

    const fs::path series_path = resolve_output(opts, cfg.series_name);
    const fs::path report_path = resolve_output(opts, cfg.report_name);
    {
        std::ofstream series(series_path);
        if (series) write_series_csv(series, traj, cfg.chart());
        std::ofstream rep(report_path);
        if (rep) write_report(rep, cfg, traj, report, summary);
    }

    out << path << ": " << summary.status;
    if (!summary.detail.empty()) out << " (" << summary.detail << ")";
    out << ", invariants " << (report.pass() ? "pass" : "FAIL") << ", series "
        << series_path.string() << ", report " << report_path.string() << "\n";
    return exit_code;
}

int legendre_check_one(const std::string& path, const CommonOptions& opts, std::ostream& out) {
    const ScenarioLoad load = load_scenario(path);
    if (!load.ok()) {
        for (const auto& d : load.errors) out << d.to_line() << "\n";
        return kExitInvalidConfig;
    }
    const ScenarioConfig& cfg = *load.config;
    if (!cfg.lagrangian_side) {
        out << "error layout: legendre-check needs a scenario with a lagrangian\n";
        return kExitInvalidConfig;
    }
    const double tolerance = opts.tolerance > 0.0 ? opts.tolerance : cfg.legendre_tolerance;

    // both sides run the same fixed-step grid so states compare pointwise
    IntegratorConfig grid = cfg.integrator;
    grid.scheme = IntegratorConfig::Scheme::Rk4;

    const LagrangianSystem& lag = *cfg.lagrangian;
    const LegendreMap& leg = lag.legendre();

    double trajectory_gap = 0.0;
    double field_gap = 0.0;
    std::string status = "completed";
    std::string detail;
    int exit_code = kExitPass;
    try {
        const SystemInstance ham = lag.hamiltonian_system();
        const Trajectory lag_traj = integrate(lag, cfg.initial_state, grid);
        const Trajectory ham_traj = integrate(ham, leg.forward(cfg.initial_state), grid);
        if (lag_traj.halted_early || ham_traj.halted_early) {
            status = "halted_early";
            detail = lag_traj.halted_early ? lag_traj.halt_reason : ham_traj.halt_reason;
            exit_code = kExitIntegrationFailure;
        } else {
            const std::size_t n = std::min(lag_traj.size(), ham_traj.size());
            const std::size_t stride = std::max<std::size_t>(1, n / 512);
            for (std::size_t i = 0; i < n; i += stride) {
                const std::vector<double> mapped = leg.forward(lag_traj.states[i]);
                for (std::size_t j = 0; j < mapped.size(); ++j)
                    trajectory_gap = std::max(
                        trajectory_gap, std::abs(mapped[j] - ham_traj.states[i][j]));
            }
            for (std::size_t i = 0; i < n; i += stride * 8) {
                const std::vector<double> field_l = lag.evolution_field(lag_traj.states[i]);
                const std::vector<double> mapped =
                    linalg::mat_vec(leg.jacobian(lag_traj.states[i]), field_l);
                const std::vector<double> field_h =
                    ham.evolution_field(leg.forward(lag_traj.states[i]));
                for (std::size_t j = 0; j < mapped.size(); ++j)
                    field_gap = std::max(field_gap, std::abs(mapped[j] - field_h[j]));
            }
        }
    } catch (const SingularLegendre& e) {
        status = "error";
        detail = e.what();
        exit_code = kExitSingularLegendre;
    } catch (const NewtonDivergence& e) {
        status = "error";
        detail = e.what();
        exit_code = kExitSingularLegendre;
    } catch (const Error& e) {
        status = "error";
        detail = e.what();
        exit_code = kExitIntegrationFailure;
    }

    const bool pass = exit_code == kExitPass && trajectory_gap <= tolerance;
    if (exit_code == kExitPass && !pass) exit_code = kExitFail;

    const fs::path report_path =
        resolve_output(opts, cfg.name + "_legendre_report.txt");
    {
        std::ofstream rep(report_path);
        if (rep) {
            rep << "scenario = " << cfg.name << "\n";
            rep << "class = " << to_string(cfg.system_class) << "\n";
            rep << "check = legendre_transport\n";
            rep << "seed = " << opts.seed << "\n";
            rep << "status = " << status << "\n";
            if (!detail.empty()) rep << "detail = " << detail << "\n";
            rep << "tolerance = " << g17(tolerance) << "\n";
            rep << "trajectory_gap = " << g17(trajectory_gap) << "\n";
            rep << "field_gap = " << g17(field_gap) << "\n";
            rep << "overall = " << (pass ? "PASS" : "FAIL") << "\n";
        }
    }
    out << path << ": " << status << ", trajectory gap " << g17(trajectory_gap)
        << " (tolerance " << g17(tolerance) << "), report " << report_path.string() << "\n";
    return exit_code;
}

int list_examples(std::ostream& out, std::ostream& err) {
    const char* env = std::getenv("COSYM_EXAMPLES_DIR");
    const fs::path dir = env && *env ? fs::path(env) : fs::path(COSYM_DEFAULT_EXAMPLES_DIR);
    if (!fs::is_directory(dir)) {
        err << "error file-io: example directory '" << dir.string() << "' not found\n";
        return kExitInvalidConfig;
    }
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".cfg")
            names.push_back(entry.path().filename().string());
    std::sort(names.begin(), names.end());
    out << dir.string() << "\n";
    for (const auto& name : names) out << "  " << name << "\n";
    return kExitPass;
}

/// Fans per-file work across jobs workers; output is buffered per file and
/// printed in input order. Workers share nothing mutable.
int run_over_files(const std::vector<std::string>& files, unsigned jobs,
                   const std::function<int(const std::string&, std::ostream&)>& work,
                   std::ostream& out) {
    const std::size_t n = files.size();
    std::vector<std::string> buffers(n);
    std::vector<int> codes(n, 0);
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            std::ostringstream os;
            codes[i] = work(files[i], os);
            buffers[i] = os.str();
        }
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                std::ostringstream os;
                codes[i] = work(files[i], os);
                buffers[i] = os.str();
            }
        };
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < std::min<unsigned>(jobs, n); ++t)
            pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    int exit_code = 0;
    for (std::size_t i = 0; i < n; ++i) {
        out << buffers[i];
        exit_code = std::max(exit_code, codes[i]);
    }
    return exit_code;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"simulator for geometric nonequilibrium thermodynamics"};
    app.require_subcommand(1);

    CommonOptions opts;
    std::vector<std::string> validate_files, simulate_files, legendre_files;

    CLI::App* validate = app.add_subcommand("validate", "statically check scenario files");
    validate->add_option("files", validate_files, "scenario files")->required();
    validate->add_option("--jobs", opts.jobs, "parallel workers");

    CLI::App* simulate =
        app.add_subcommand("simulate", "integrate scenarios and verify invariants");
    simulate->add_option("files", simulate_files, "scenario files")->required();
    simulate->add_option("--out", opts.out_dir, "output directory");
    simulate->add_option("--seed", opts.seed, "seed recorded in reports");
    simulate->add_option("--jobs", opts.jobs, "parallel workers");

    CLI::App* legendre = app.add_subcommand(
        "legendre-check", "integrate both pictures of a Lagrangian scenario and compare");
    legendre->add_option("files", legendre_files, "scenario files")->required();
    legendre->add_option("--out", opts.out_dir, "output directory");
    legendre->add_option("--tolerance", opts.tolerance, "trajectory gap tolerance");
    legendre->add_option("--seed", opts.seed, "seed recorded in reports");
    legendre->add_option("--jobs", opts.jobs, "parallel workers");

    CLI::App* list = app.add_subcommand("list-examples", "list shipped scenario files");
    (void)list;

    std::vector<std::string> argv = args;
    std::reverse(argv.begin(), argv.end()); // CLI11 parses right to left
    try {
        app.parse(argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream os;
        const int code = app.exit(e, os, os);
        (code == 0 ? out : err) << os.str();
        return code == 0 ? kExitPass : kExitInvalidConfig;
    }

    if (validate->parsed())
        return run_over_files(validate_files, opts.jobs, validate_one, out);
    if (simulate->parsed()) {
        if (!ensure_output_dir(opts, err)) return kExitInvalidConfig;
        return run_over_files(
            simulate_files, opts.jobs,
            [&opts](const std::string& path, std::ostream& os) {
                return simulate_one(path, opts, os);
            },
            out);
    }
    if (legendre->parsed()) {
        if (!ensure_output_dir(opts, err)) return kExitInvalidConfig;
        return run_over_files(
            legendre_files, opts.jobs,
            [&opts](const std::string& path, std::ostream& os) {
                return legendre_check_one(path, opts, os);
            },
            out);
    }
    return list_examples(out, err);
}

} // namespace cosym
