#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ottosim/dynamics.hpp"
#include "ottosim/error.hpp"
#include "ottosim/linalg.hpp"
#include "ottosim/model.hpp"

namespace ottosim {

enum class HeatingMode { finite, full };
enum class UnitaryMode { adiabatic, finite, sudden };

struct StrokeMode {
    HeatingMode heating = HeatingMode::finite;
    UnitaryMode unitary = UnitaryMode::adiabatic;
};

/// How the fully thermalized state is produced.
enum class FullThermalization {
    gibbs,         ///< exp(-beta H_s(B_h)) / Z_h with the phonon in vacuum
    steady_state,  ///< Lindblad propagation until max|rhs| < 1e-9 (capped at 2000/omega)
};
enum class InitialState { bare, dressed };
enum class Projection { full, atoms_only };

struct CycleOptions {
    double dt = 1e-3;
    std::size_t sample_stride = 100;
    FullThermalization full_thermalization = FullThermalization::gibbs;
    bool thermalize_with_phonon = true;
    InitialState initial_state = InitialState::bare;
    Projection projection = Projection::full;
    std::size_t homotopy_points = 32;
    bool keep_trajectories = false;

    [[nodiscard]] PropagationOptions propagation() const {
        return PropagationOptions{dt, sample_stride, thermalize_with_phonon};
    }
};

struct StrokeRecord {
    std::string label;  ///< "1-2", "2-3", "3-4" or "4-1"
    double U_before = 0.0;
    double U_after = 0.0;
    double duration = 0.0;  ///< +inf for quasi-static strokes
    std::optional<Trajectory> trajectory;
};

/// Thermodynamic record of one cycle (energies in units of omega).
/// Sign convention: W23 = U2 - U1 and W41 = U4 - U3 are work done on the
/// medium; W_out = -(W23 + W41) is the extracted work.
struct CycleResult {
    double Q_h = 0.0;
    double Q_c = 0.0;
    double W23 = 0.0;
    double W41 = 0.0;
    double w41_paper_literal = 0.0;  ///< U4 - U0
    double W_net_raw = 0.0;          ///< W23 + W41
    double W_out = 0.0;
    double eta = std::numeric_limits<double>::quiet_NaN();
    double eta_raw = std::numeric_limits<double>::quiet_NaN();  ///< W_net_raw / Q_h
    double power = 0.0;
    double t_cycle = 0.0;
    double F12 = 0.0;
    double F23 = 0.0;
    double F41 = 0.0;
    double Wfri_exp = 0.0;
    double Wfri_comp = 0.0;
    double closure_defect = 0.0;      ///< |U4 - U0|
    double first_law_residual = 0.0;  ///< (Q_h + Q_c + W23 + W41) - (U4 - U0)
    bool engine_flag = false;

    double min_eigenvalue = 0.0;
    double max_trace_drift_rate = 0.0;
    double max_purity_drift = 0.0;

    std::array<StrokeRecord, 4> strokes;
    /// States at the stroke boundaries: rho(0), rho1, rho2, rho3, rho4.
    std::array<QuantumState, 5> states;
};

/// U = Tr[Tr_ph(rho) H_s(B)].
inline double atomic_energy(const QuantumState& rho, const EngineParams& p, double B) {
    if (rho.dims().size() != 3 || rho.dims()[0] != 2 || rho.dims()[1] != 2)
        throw DimensionError{"atomic_energy: expected a state on atom1 ⊗ atom2 ⊗ phonon"};
    const auto reduced = partial_trace(rho, {0, 1});
    const cplx u = (reduced.matrix() * build_system_hamiltonian(p, B)).trace();
    if (std::abs(u.imag()) > 1e-8) {
        std::ostringstream msg;
        msg << "atomic_energy: imaginary part " << u.imag() << " exceeds 1e-8";
        throw NumericalError{msg.str()};
    }
    return u.real();
}

/// The cycle's reference state rho(0).
inline QuantumState initial_state(const EngineParams& p, InitialState kind = InitialState::bare) {
    if (kind == InitialState::bare) return ground_vacuum_state(p.n_ph);
    const auto eig = herm_eig(build_total_hamiltonian(p, p.B_h));
    const auto v = eig.vectors.column(0);
    return QuantumState{ComplexMatrix::outer(v, v), p.dims()};
}

/// Projection measurement of the cold isochore: replaces the state by rho(0).
inline QuantumState project_to_initial(const QuantumState& rho, const EngineParams& p,
                                       InitialState kind = InitialState::bare,
                                       Projection projection = Projection::full) {
    if (rho.dim() != p.dim()) throw DimensionError{"project_to_initial: state dimension does not match parameters"};
    if (projection == Projection::full) return initial_state(p, kind);
    // Atoms to |gg>, phonon marginal kept.
    const auto phonon = partial_trace(rho, {2});
    ComplexMatrix gg{4};
    gg(0, 0) = 1.0;
    return QuantumState{kron(gg, phonon.matrix()), p.dims()};
}

/// W - ΔF with ΔF = F(b_end) - F(b_start) and F(B) = -beta^-1 ln Tr exp(-beta H_s(B)).
inline double friction_work(double w_actual, const EngineParams& p, const InverseTemperature& beta, double b_start,
                            double b_end) {
    if (b_start == b_end) return w_actual;
    const double df = free_energy(build_system_hamiltonian(p, b_end), beta) -
                      free_energy(build_system_hamiltonian(p, b_start), beta);
    return w_actual - df;
}

inline double friction_work(double w_actual, const EngineParams& p, const InverseTemperature& beta,
                            RampProtocol::Direction stroke) {
    return stroke == RampProtocol::Direction::expansion ? friction_work(w_actual, p, beta, p.B_h, p.B_c)
                                                        : friction_work(w_actual, p, beta, p.B_c, p.B_h);
}

struct StrokeFidelities {
    double F12 = 0.0;
    double F23 = 0.0;
    double F41 = 0.0;
};

/// Fidelities at the stroke ends, evaluated on atomic reductions: rho1 against
/// Gibbs(H_s(B_h)), rho2 against Gibbs(H_s(B_c)), rho4 against rho(0).
inline StrokeFidelities stroke_fidelities(const QuantumState& rho1, const QuantumState& rho2, const QuantumState& rho4,
                                          const QuantumState& rho_initial, const EngineParams& p,
                                          const InverseTemperature& beta) {
    const auto hot = gibbs_state(build_system_hamiltonian(p, p.B_h), beta);
    const auto cold = gibbs_state(build_system_hamiltonian(p, p.B_c), beta);
    const auto ref0 = partial_trace(rho_initial, {0, 1});
    return StrokeFidelities{uhlmann_fidelity(partial_trace(rho1, {0, 1}), hot),
                            uhlmann_fidelity(partial_trace(rho2, {0, 1}), cold),
                            uhlmann_fidelity(partial_trace(rho4, {0, 1}), ref0)};
}

/// Time-resolved fidelity of a trajectory's atomic reduction against a fixed reference.
inline std::vector<double> fidelity_series(const Trajectory& traj, const QuantumState& atomic_reference) {
    std::vector<double> out;
    out.reserve(traj.states.size());
    for (const auto& s : traj.states) out.push_back(uhlmann_fidelity(partial_trace(s, {0, 1}), atomic_reference));
    return out;
}

/// Fidelity series against Gibbs(H_s(B(t))) at each sample's own field.
/// At a stroke end this coincides with the fixed end-of-ramp reference.
inline std::vector<double> instantaneous_fidelity_series(const Trajectory& traj, const EngineParams& p,
                                                         const InverseTemperature& beta) {
    std::vector<double> out;
    out.reserve(traj.states.size());
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        const auto ref = gibbs_state(build_system_hamiltonian(p, traj.fields[k]), beta);
        out.push_back(uhlmann_fidelity(partial_trace(traj.states[k], {0, 1}), ref));
    }
    return out;
}

namespace detail {

template <class F>
auto labelled(const char* stroke, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const NumericalError& e) {
        throw NumericalError{std::string{"stroke "} + stroke + ": " + e.what()};
    } catch (const InvalidArgument& e) {
        throw InvalidArgument{std::string{"stroke "} + stroke + ": " + e.what()};
    }
}

} // namespace detail

/// Runs the four strokes 1-2 (hot isochore), 2-3 (expansion), 3-4 (projection),
/// 4-1 (compression) and assembles the thermodynamic record.
inline CycleResult run_cycle(const EngineParams& p, const StrokeMode& mode, double t1, double tau,
                             const CycleOptions& opt = {}) {
    p.validate();
    if (mode.heating == HeatingMode::finite && !(t1 >= 0.0)) throw InvalidArgument{"run_cycle: t1 must be >= 0"};
    if (mode.unitary == UnitaryMode::finite && !(tau >= 0.0)) throw InvalidArgument{"run_cycle: tau must be >= 0"};

    const auto beta = beta_from_nbar(p.nbar, p.B_h);
    const auto prop = opt.propagation();
    const double inf = std::numeric_limits<double>::infinity();

    CycleResult r;
    r.min_eigenvalue = std::numeric_limits<double>::infinity();
    auto absorb = [&](const Trajectory& traj) {
        r.min_eigenvalue = std::min(r.min_eigenvalue, traj.min_eigenvalue);
        r.max_trace_drift_rate = std::max(r.max_trace_drift_rate, traj.max_trace_drift_rate);
        r.max_purity_drift = std::max(r.max_purity_drift, traj.max_purity_drift);
    };
    auto absorb_state = [&](const QuantumState& s) {
        r.min_eigenvalue = std::min(r.min_eigenvalue, s.diagnostics().min_eigenvalue);
    };

    const QuantumState rho0 = initial_state(p, opt.initial_state);
    const double U0 = atomic_energy(rho0, p, p.B_h);

    // (1-2) hot isochore at B_h
    StrokeRecord s12{"1-2", U0, 0.0, 0.0, std::nullopt};
    const QuantumState rho1 = detail::labelled("1-2", [&]() -> QuantumState {
        if (mode.heating == HeatingMode::finite) {
            auto traj = propagate_lindblad(rho0, p, t1, prop);
            absorb(traj);
            s12.duration = t1;
            QuantumState out = traj.final_state();
            if (opt.keep_trajectories) s12.trajectory = std::move(traj);
            return out;
        }
        if (opt.full_thermalization == FullThermalization::steady_state) {
            auto traj = propagate_to_steady_state(rho0, p, prop);
            absorb(traj);
            s12.duration = traj.duration();
            QuantumState out = traj.final_state();
            if (opt.keep_trajectories) s12.trajectory = std::move(traj);
            return out;
        }
        s12.duration = inf;
        auto out = with_phonon_vacuum(gibbs_state(build_system_hamiltonian(p, p.B_h), beta), p.n_ph);
        absorb_state(out);
        return out;
    });
    const double U1 = atomic_energy(rho1, p, p.B_h);
    s12.U_after = U1;

    auto unitary_stroke = [&](const char* label, const QuantumState& in, const RampProtocol& ramp,
                              StrokeRecord& rec) -> QuantumState {
        return detail::labelled(label, [&]() -> QuantumState {
            switch (mode.unitary) {
            case UnitaryMode::adiabatic: {
                rec.duration = inf;
                auto out = adiabatic_map(in, build_total_hamiltonian(p, ramp.b_start),
                                         build_total_hamiltonian(p, ramp.b_end), opt.homotopy_points);
                absorb_state(out);
                return out;
            }
            case UnitaryMode::sudden:
                rec.duration = 0.0;
                return in;
            case UnitaryMode::finite:
                break;
            }
            auto traj = propagate_unitary(in, p, ramp, prop);
            absorb(traj);
            rec.duration = ramp.tau;
            QuantumState out = traj.final_state();
            if (opt.keep_trajectories) rec.trajectory = std::move(traj);
            return out;
        });
    };

    // (2-3) expansion B_h -> B_c
    StrokeRecord s23{"2-3", U1, 0.0, 0.0, std::nullopt};
    const QuantumState rho2 = unitary_stroke("2-3", rho1, RampProtocol::expansion(p, tau), s23);
    const double U2 = atomic_energy(rho2, p, p.B_c);
    s23.U_after = U2;

    // (3-4) instantaneous projection at B_c
    const QuantumState rho3 = project_to_initial(rho2, p, opt.initial_state, opt.projection);
    const double U3 = atomic_energy(rho3, p, p.B_c);
    StrokeRecord s34{"3-4", U2, U3, 0.0, std::nullopt};

    // (4-1) compression B_c -> B_h
    StrokeRecord s41{"4-1", U3, 0.0, 0.0, std::nullopt};
    const QuantumState rho4 = unitary_stroke("4-1", rho3, RampProtocol::compression(p, tau), s41);
    const double U4 = atomic_energy(rho4, p, p.B_h);
    s41.U_after = U4;

    r.Q_h = U1 - U0;
    r.W23 = U2 - U1;
    r.Q_c = U3 - U2;
    r.W41 = U4 - U3;
    r.w41_paper_literal = U4 - U0;
    r.W_net_raw = r.W23 + r.W41;
    r.W_out = -r.W_net_raw;
    if (r.Q_h != 0.0) {
        r.eta = r.W_out / r.Q_h;
        r.eta_raw = r.W_net_raw / r.Q_h;
    }
    r.t_cycle = s12.duration + s23.duration + s41.duration;
    r.power = (std::isfinite(r.t_cycle) && r.t_cycle > 0.0) ? r.W_out / r.t_cycle : 0.0;
    r.closure_defect = std::abs(U4 - U0);
    r.first_law_residual = (r.Q_h + r.Q_c + r.W23 + r.W41) - (U4 - U0);
    r.engine_flag = r.Q_h > 0.0 && r.Q_c < 0.0 && std::abs(r.Q_h) > std::abs(r.Q_c);

    const auto fid = stroke_fidelities(rho1, rho2, rho4, rho0, p, beta);
    r.F12 = fid.F12;
    r.F23 = fid.F23;
    r.F41 = fid.F41;
    r.Wfri_exp = friction_work(r.W23, p, beta, RampProtocol::Direction::expansion);
    r.Wfri_comp = friction_work(r.W41, p, beta, RampProtocol::Direction::compression);

    if (!std::isfinite(r.min_eigenvalue)) r.min_eigenvalue = rho0.diagnostics().min_eigenvalue;
    r.strokes = {std::move(s12), std::move(s23), std::move(s34), std::move(s41)};
    r.states = {rho0, rho1, rho2, rho3, rho4};
    return r;
}

} // namespace ottosim
