// Command-line front end: simulation runs, periodic-solution enumeration,
// bifurcation scans, stability reports, rate measurement, and the acceptance
// suite. Emits CSV/JSON for external plotting.
//
// Exit codes: 0 success, 1 numerical failure, 2 configuration error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "thermorelay/bifurcation.hpp"
#include "thermorelay/characteristic.hpp"
#include "thermorelay/common.hpp"
#include "thermorelay/dynamics.hpp"
#include "thermorelay/io.hpp"
#include "thermorelay/poincare.hpp"
#include "thermorelay/spectral_system.hpp"
#include "thermorelay/stability.hpp"
#include "thermorelay/verification.hpp"

namespace tr = thermorelay;
using nlohmann::json;

namespace {

struct Options {
    std::string config_path;
    std::string output_dir = "out";
    std::optional<double> alpha, beta, horizon, stride, s_min, s_max, delta0;
    std::optional<std::size_t> n_points, n_periods;
    std::optional<std::uint64_t> seed;
};

struct RunConfig {
    json raw;  // merged config (file fields + flag overrides); hashed into outputs
    tr::SpectralSystem system;
    double alpha = 0.0;
    double beta = 1.0;
    double horizon = 10.0;
    double stride = 0.01;
    double s_min = 0.01;
    double s_max = 8.0;
    double delta0 = 1e-6;
    std::size_t n_points = 400;
    std::size_t n_periods = 48;
    std::uint64_t seed = 20240601u;
    std::filesystem::path out_dir;
};

json load_config_file(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw tr::ConfigError("config file does not exist: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw tr::ConfigError("config file " + path + ": " + e.what());
    }
    return j;
}

template <typename T>
T field_or(const json& j, const char* name, T fallback) {
    if (!j.contains(name)) return fallback;
    try {
        return j.at(name).get<T>();
    } catch (const json::exception&) {
        throw tr::ConfigError(std::string("config field '") + name + "' has the wrong type");
    }
}

RunConfig resolve(const Options& opt, bool need_system) {
    json j = load_config_file(opt.config_path);

    // Flags override file fields.
    auto override_num = [&j](const char* name, const auto& value) {
        if (value) j[name] = *value;
    };
    override_num("alpha", opt.alpha);
    override_num("beta", opt.beta);
    override_num("horizon", opt.horizon);
    override_num("stride", opt.stride);
    override_num("s_min", opt.s_min);
    override_num("s_max", opt.s_max);
    override_num("delta0", opt.delta0);
    override_num("n_points", opt.n_points);
    override_num("n_periods", opt.n_periods);
    override_num("seed", opt.seed);
    if (!opt.output_dir.empty()) j["output_dir"] = opt.output_dir;

    RunConfig cfg;
    cfg.raw = j;
    if (need_system) {
        if (!j.contains("system")) throw tr::ConfigError("config: missing field 'system'");
        cfg.system = tr::parse_system(j.at("system"));
        const tr::ValidationReport rep = tr::validate(cfg.system);
        if (!rep.ok) {
            std::string msg = "config: system fails validation:";
            for (const auto& v : rep.violations) msg += " " + v;
            throw tr::ConfigError(msg);
        }
    }
    cfg.alpha = field_or(j, "alpha", cfg.alpha);
    cfg.beta = field_or(j, "beta", cfg.beta);
    if (!(cfg.alpha < cfg.beta)) throw tr::ConfigError("config: requires alpha < beta");
    cfg.horizon = field_or(j, "horizon", cfg.horizon);
    cfg.stride = field_or(j, "stride", cfg.stride);
    cfg.s_min = field_or(j, "s_min", cfg.s_min);
    cfg.s_max = field_or(j, "s_max", cfg.s_max);
    cfg.delta0 = field_or(j, "delta0", cfg.delta0);
    cfg.n_points = field_or(j, "n_points", cfg.n_points);
    cfg.n_periods = field_or(j, "n_periods", cfg.n_periods);
    cfg.seed = field_or(j, "seed", cfg.seed);
    if (!(cfg.stride > 0.0)) throw tr::ConfigError("config: stride must be positive");
    if (!(cfg.horizon > 0.0)) throw tr::ConfigError("config: horizon must be positive");

    cfg.out_dir = field_or<std::string>(j, "output_dir", "out");
    std::filesystem::create_directories(cfg.out_dir);
    return cfg;
}

json output_header(const RunConfig& cfg) {
    json j;
    j["version"] = tr::kVersion;
    j["config_hash"] = tr::config_fingerprint(cfg.raw);
    j["n_modes"] = cfg.system.n_modes();
    return j;
}

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    out << j.dump(2) << "\n";
}

int cmd_simulate(const RunConfig& cfg) {
    tr::ModeVector phi;
    phi.values = cfg.raw.contains("phi") ? cfg.raw.at("phi").get<std::vector<double>>()
                                         : std::vector<double>(cfg.system.n_modes(), 0.0);
    if (phi.values.size() != cfg.system.n_modes())
        throw tr::ConfigError("config: phi length does not match the system");

    const tr::Trajectory traj =
        tr::simulate(cfg.system, phi, cfg.alpha, cfg.beta, cfg.horizon);

    std::ofstream csv(cfg.out_dir / "trajectory.csv", std::ios::binary);
    tr::write_trajectory_csv(csv, cfg.system, traj, cfg.stride);

    json summary = output_header(cfg);
    summary["switch_times"] = traj.switch_times;
    summary["switch_grazing"] = traj.switch_grazing;
    json relay_history = json::array();
    for (const auto& seg : traj.segments)
        relay_history.push_back(
            {{"start", seg.start_time}, {"end", seg.end_time}, {"h", seg.relay_output}});
    summary["relay_history"] = relay_history;
    summary["terminal"] = traj.terminal.values;
    write_json(cfg.out_dir / "run_summary.json", summary);
    std::cout << "simulate: " << traj.switch_times.size() << " switchings, wrote "
              << (cfg.out_dir / "trajectory.csv").string() << "\n";
    return 0;
}

int cmd_periodic(const RunConfig& cfg) {
    std::string warning;
    const auto sols = tr::enumerate_periodic(cfg.system, cfg.alpha, cfg.beta, cfg.s_max, &warning);

    // Bifurcation gap values nearby get flagged on each record.
    const tr::Diagram diagram =
        tr::scan_diagram(cfg.system, std::min(0.01, cfg.s_max / 100.0), cfg.s_max, 300);

    json records = json::array();
    for (const auto& sol : sols) {
        json rec = tr::solution_to_json(cfg.system, sol);
        bool near_bif = false;
        for (const auto& p : diagram.points)
            near_bif = near_bif || std::abs(p.gap - (cfg.beta - cfg.alpha)) < 1e-4;
        rec["near_bifurcation"] = near_bif;
        if (sol.valid) {
            rec["verification"] = tr::verification_to_json(
                tr::verify_by_simulation(cfg.system, sol, 1e-8));
            try {
                rec["stability"] = tr::stability_to_json(tr::classify(cfg.system, sol));
            } catch (const tr::NumericError& e) {
                rec["stability"] = {{"error", e.what()}};
            }
        }
        records.push_back(std::move(rec));
    }
    json out = output_header(cfg);
    out["gap"] = cfg.beta - cfg.alpha;
    out["solutions"] = records;
    if (!warning.empty()) out["warning"] = warning;
    write_json(cfg.out_dir / "solutions.json", out);
    std::size_t valid = 0;
    for (const auto& s : sols) valid += s.valid ? 1 : 0;
    std::cout << "periodic: " << sols.size() << " candidates, " << valid << " valid, wrote "
              << (cfg.out_dir / "solutions.json").string() << "\n";
    return 0;
}

int cmd_bifurcate(const RunConfig& cfg) {
    const tr::Diagram diagram = tr::scan_diagram(cfg.system, cfg.s_min, cfg.s_max, cfg.n_points);
    std::ofstream csv(cfg.out_dir / "diagram.csv", std::ios::binary);
    tr::write_diagram_csv(csv, diagram.rows);

    json out = output_header(cfg);
    json points = json::array();
    for (const auto& p : diagram.points) points.push_back(tr::point_to_json(p));
    out["points"] = points;
    write_json(cfg.out_dir / "points.json", out);
    std::cout << "bifurcate: " << diagram.rows.size() << " rows, " << diagram.points.size()
              << " bifurcation points, wrote " << (cfg.out_dir / "diagram.csv").string() << "\n";
    return 0;
}

int cmd_stability(const RunConfig& cfg) {
    const auto sols = tr::enumerate_periodic(cfg.system, cfg.alpha, cfg.beta, cfg.s_max);
    json out = output_header(cfg);
    json reports = json::array();
    for (const auto& sol : sols) {
        if (!sol.valid) continue;
        json rec;
        rec["solution"] = tr::solution_to_json(cfg.system, sol);
        try {
            rec["stability"] = tr::stability_to_json(tr::classify(cfg.system, sol));
        } catch (const tr::NumericError& e) {
            rec["stability"] = {{"error", e.what()}};
        }
        reports.push_back(std::move(rec));
    }
    out["reports"] = reports;
    write_json(cfg.out_dir / "stability.json", out);
    std::cout << "stability: " << reports.size() << " valid solutions, wrote "
              << (cfg.out_dir / "stability.json").string() << "\n";
    return 0;
}

int cmd_rate(const RunConfig& cfg) {
    const auto sols = tr::enumerate_periodic(cfg.system, cfg.alpha, cfg.beta, cfg.s_max);
    json out = output_header(cfg);
    json measurements = json::array();
    int index = 0;
    for (const auto& sol : sols) {
        if (!sol.valid) continue;
        const double max_mu = [&] {
            if (cfg.system.sensor_indices().empty()) return 0.0;
            double m = 0.0;
            for (const auto& mu : tr::eigensolve(tr::matrix_A(cfg.system, sol.s)).values)
                m = std::max(m, std::abs(mu));
            return m;
        }();
        const double predicted =
            std::max(max_mu * max_mu, std::exp(-2.0 * cfg.system.kappa() * sol.s));
        tr::RateMeasurement m =
            tr::measure_rate(cfg.system, sol, cfg.delta0, cfg.n_periods, cfg.seed);
        try {
            const tr::StabilityReport rep = tr::classify(cfg.system, sol);
            m.diverged_while_stable =
                rep.classification == tr::StabilityClass::Stable && m.factor > 1.0;
        } catch (const tr::NumericError&) {
            // Transversality hypothesis failed; no stability expectation to check.
        }
        json rec = tr::rate_to_json(m, predicted);
        rec["s"] = sol.s;
        measurements.push_back(std::move(rec));

        std::ofstream csv(cfg.out_dir / ("rate_" + std::to_string(index) + ".csv"),
                          std::ios::binary);
        tr::write_rate_csv(csv, m);
        ++index;
    }
    out["measurements"] = measurements;
    write_json(cfg.out_dir / "rate.json", out);
    std::cout << "rate: measured " << measurements.size() << " solutions, wrote "
              << (cfg.out_dir / "rate.json").string() << "\n";
    return 0;
}

int cmd_verify(const Options& opt) {
    const auto results = tr::run_acceptance(std::cout);
    json out;
    out["version"] = tr::kVersion;
    out["config_hash"] = tr::config_fingerprint(load_config_file(opt.config_path));
    json list = json::array();
    int failed = 0;
    for (const auto& r : results) {
        list.push_back({{"id", r.id},
                        {"name", r.name},
                        {"pass", r.pass},
                        {"detail", r.detail},
                        {"seconds", r.seconds}});
        failed += r.pass ? 0 : 1;
    }
    out["criteria"] = list;
    if (!opt.output_dir.empty()) {
        std::filesystem::create_directories(opt.output_dir);
        write_json(std::filesystem::path(opt.output_dir) / "acceptance.json", out);
    }
    return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"thermostat relay control in spectral form: simulation, periodic orbits, "
                 "bifurcation diagrams, stability"};
    app.require_subcommand(1);

    Options opt;
    app.add_option("--config", opt.config_path, "JSON config file");
    app.add_option("--out", opt.output_dir, "output directory");
    app.add_option("--alpha", opt.alpha, "lower threshold");
    app.add_option("--beta", opt.beta, "upper threshold");
    app.add_option("--horizon", opt.horizon, "simulation horizon");
    app.add_option("--stride", opt.stride, "trajectory CSV output stride");
    app.add_option("--s-min", opt.s_min, "diagram scan lower bound");
    app.add_option("--s-max", opt.s_max, "half-period search upper bound");
    app.add_option("--n-points", opt.n_points, "diagram grid size");
    app.add_option("--delta0", opt.delta0, "initial perturbation norm for rate runs");
    app.add_option("--n-periods", opt.n_periods, "periods to iterate in rate runs");
    app.add_option("--seed", opt.seed, "random seed for rate runs");

    auto* sim = app.add_subcommand("simulate", "integrate the switched system, write CSV");
    auto* per = app.add_subcommand("periodic", "enumerate symmetric periodic solutions");
    auto* bif = app.add_subcommand("bifurcate", "scan the bifurcation diagram over s");
    auto* sta = app.add_subcommand("stability", "stability reports for valid solutions");
    auto* rate = app.add_subcommand("rate", "measure empirical contraction/growth rates");
    auto* ver = app.add_subcommand("verify", "run the acceptance suite");
    // Global options may follow the subcommand name.
    for (auto* sc : {sim, per, bif, sta, rate, ver}) sc->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (ver->parsed()) return cmd_verify(opt);
        const RunConfig cfg = resolve(opt, true);
        if (sim->parsed()) return cmd_simulate(cfg);
        if (per->parsed()) return cmd_periodic(cfg);
        if (bif->parsed()) return cmd_bifurcate(cfg);
        if (sta->parsed()) return cmd_stability(cfg);
        if (rate->parsed()) return cmd_rate(cfg);
    } catch (const tr::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const tr::NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
