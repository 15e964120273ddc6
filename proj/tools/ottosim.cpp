// ottosim: command-line front end for the two-atom Otto cycle simulator.

#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <numbers>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "ottosim/cycle.hpp"
#include "ottosim/log.hpp"
#include "ottosim/model.hpp"
#include "ottosim/sweep.hpp"
#include "ottosim/version.hpp"

namespace {

using namespace ottosim;

struct RunArgs {
    std::string spec_path;
    std::string out_dir = ".";
    std::size_t workers = 0;
    std::optional<double> dt;
};

struct CycleArgs {
    EngineParams params;
    std::string mode = "finite/adiabatic";
    double t1 = 50.0;
    double tau = 10.0;
    double dt = 1e-3;
    std::string thermalization = "gibbs";
    std::string initial = "bare";
    std::string projection = "full";
    bool no_phonon_thermalization = false;
};

struct CoeffArgs {
    double xi = 0.2;
    double theta = std::numbers::pi / 2;
    double Gamma = 0.1;
};

StrokeMode parse_mode(const std::string& text) {
    const auto slash = text.find('/');
    if (slash == std::string::npos) throw InvalidArgument{"--mode expects <heating>/<unitary>, e.g. full/finite"};
    const std::string h = text.substr(0, slash);
    const std::string u = text.substr(slash + 1);
    StrokeMode m;
    if (h == "finite") m.heating = HeatingMode::finite;
    else if (h == "full") m.heating = HeatingMode::full;
    else throw InvalidArgument{"--mode: heating must be finite or full, got '" + h + "'"};
    if (u == "adiabatic") m.unitary = UnitaryMode::adiabatic;
    else if (u == "finite") m.unitary = UnitaryMode::finite;
    else if (u == "sudden") m.unitary = UnitaryMode::sudden;
    else throw InvalidArgument{"--mode: unitary must be adiabatic, finite or sudden, got '" + u + "'"};
    return m;
}

int cmd_run(const RunArgs& a) {
    SweepSpec spec = load_spec(a.spec_path);
    if (a.dt) {
        spec.options.dt = *a.dt;
        validate_spec(spec);
    }
    const std::size_t workers =
        a.workers > 0 ? a.workers : std::max<std::size_t>(1, std::thread::hardware_concurrency());

    namespace fs = std::filesystem;
    const fs::path out_dir{a.out_dir};
    fs::create_directories(out_dir);
    const std::string stem = fs::path{a.spec_path}.stem().string();

    log::info("running " + std::to_string(spec.grid_size()) + " grid points on " + std::to_string(workers) +
              " workers");
    const auto rows = run_sweep(spec, workers);
    const auto failed = std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return !r.ok(); });

    write_csv(rows, out_dir / (stem + ".csv"), spec.outputs);
    write_json(rows, out_dir / (stem + ".json"), spec.outputs);
    write_metadata(spec, rows.size(), out_dir / (stem + ".meta.json"));

    std::cerr << rows.size() << " rows written to " << (out_dir / (stem + ".csv")).string();
    if (failed > 0) std::cerr << " (" << failed << " failed)";
    std::cerr << '\n';
    return 0;
}

int cmd_cycle(const CycleArgs& a) {
    const StrokeMode mode = parse_mode(a.mode);
    CycleOptions opt;
    opt.dt = a.dt;
    opt.thermalize_with_phonon = !a.no_phonon_thermalization;
    opt.full_thermalization =
        a.thermalization == "steady_state" ? FullThermalization::steady_state : FullThermalization::gibbs;
    opt.initial_state = a.initial == "dressed" ? InitialState::dressed : InitialState::bare;
    opt.projection = a.projection == "atoms_only" ? Projection::atoms_only : Projection::full;

    const CycleResult r = run_cycle(a.params, mode, a.t1, a.tau, opt);
    json out = cycle_to_json(r);
    out["params"] = {{"xi", a.params.xi},     {"theta", a.params.theta}, {"g", a.params.g},
                     {"B_h", a.params.B_h},   {"B_c", a.params.B_c},     {"chi1", a.params.chi1},
                     {"chi2", a.params.chi2}, {"Gamma", a.params.Gamma}, {"nbar", a.params.nbar},
                     {"omega", a.params.omega}, {"n_ph", a.params.n_ph}};
    out["mode"] = {{"mode", a.mode}, {"t1", a.t1}, {"tau", a.tau}, {"dt", a.dt}};
    std::cout << out.dump(2) << '\n';
    return 0;
}

int cmd_coeffs(const CoeffArgs& a) {
    const auto c = ddi_coefficients(a.xi, a.theta, a.Gamma);
    const json out{{"xi", a.xi},
                   {"theta", a.theta},
                   {"Gamma", a.Gamma},
                   {"omega12", c.omega12},
                   {"gamma12", c.gamma12},
                   {"gamma_plus", c.gamma_plus},
                   {"gamma_minus", c.gamma_minus}};
    std::cout << out.dump(2) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-atom quantum Otto cycle simulator"};
    app.set_version_flag("--version", std::string{tool_version});
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Evaluate a parameter sweep described by a JSON spec");
    run_cmd->add_option("spec", run.spec_path, "Sweep spec (JSON)")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--out", run.out_dir, "Output directory");
    run_cmd->add_option("--workers", run.workers, "Worker threads (default: hardware concurrency)")
        ->check(CLI::PositiveNumber);
    run_cmd->add_option("--dt", run.dt, "Override the integration step")->check(CLI::PositiveNumber);

    CycleArgs cyc;
    auto* cycle_cmd = app.add_subcommand("cycle", "Run one cycle and print the result as JSON");
    cycle_cmd->add_option("--xi", cyc.params.xi, "Dimensionless separation k0*r12")->capture_default_str();
    cycle_cmd->add_option("--theta", cyc.params.theta, "Dipole angle (rad)")->capture_default_str();
    cycle_cmd->add_option("--t1", cyc.t1, "Heating time")->capture_default_str();
    cycle_cmd->add_option("--tau", cyc.tau, "Ramp duration for finite unitary strokes")->capture_default_str();
    cycle_cmd->add_option("--mode", cyc.mode, "<finite|full>/<adiabatic|finite|sudden>")->capture_default_str();
    cycle_cmd->add_option("--dt", cyc.dt, "Integration step")->capture_default_str()->check(CLI::PositiveNumber);
    cycle_cmd->add_option("--g", cyc.params.g, "Transverse field")->capture_default_str();
    cycle_cmd->add_option("--B-h", cyc.params.B_h, "Hot field")->capture_default_str();
    cycle_cmd->add_option("--B-c", cyc.params.B_c, "Cold field")->capture_default_str();
    cycle_cmd->add_option("--chi", [&cyc](const CLI::results_t& res) {
        cyc.params.chi1 = cyc.params.chi2 = std::stod(res[0]);
        return true;
    }, "Atom-phonon coupling (both atoms)");
    cycle_cmd->add_option("--gamma", cyc.params.Gamma, "Single-atom decay rate")->capture_default_str();
    cycle_cmd->add_option("--nbar", cyc.params.nbar, "Bath occupation")->capture_default_str();
    cycle_cmd->add_option("--n-ph", cyc.params.n_ph, "Phonon truncation")->capture_default_str();
    cycle_cmd->add_option("--thermalization", cyc.thermalization, "Full heating: gibbs|steady_state")
        ->check(CLI::IsMember({"gibbs", "steady_state"}))
        ->capture_default_str();
    cycle_cmd->add_option("--initial-state", cyc.initial, "bare|dressed")
        ->check(CLI::IsMember({"bare", "dressed"}))
        ->capture_default_str();
    cycle_cmd->add_option("--projection", cyc.projection, "full|atoms_only")
        ->check(CLI::IsMember({"full", "atoms_only"}))
        ->capture_default_str();
    cycle_cmd->add_flag("--no-phonon-thermalization", cyc.no_phonon_thermalization,
                        "Drop the atom-phonon coupling during heating");

    CoeffArgs co;
    auto* coeffs_cmd = app.add_subcommand("coeffs", "Print the dipole-dipole coefficients");
    coeffs_cmd->add_option("--xi", co.xi, "Dimensionless separation")->required();
    coeffs_cmd->add_option("--theta", co.theta, "Dipole angle (rad)")->capture_default_str();
    coeffs_cmd->add_option("--gamma", co.Gamma, "Single-atom decay rate")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return cmd_run(run);
        if (cycle_cmd->parsed()) return cmd_cycle(cyc);
        if (coeffs_cmd->parsed()) return cmd_coeffs(co);
    } catch (const SpecError& e) {
        std::cerr << "ottosim: spec error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "ottosim: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
