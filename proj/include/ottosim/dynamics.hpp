#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "ottosim/error.hpp"
#include "ottosim/linalg.hpp"
#include "ottosim/log.hpp"
#include "ottosim/model.hpp"

namespace ottosim {

struct PropagationOptions {
    double dt = 1e-3;                 ///< fixed RK4 step (units 1/omega)
    std::size_t sample_stride = 100;  ///< store every n-th step (the final state is always stored)
    bool thermalize_with_phonon = true;  ///< keep the chi exchange term in the Lindblad Hamiltonian
};

/// Linear field ramp B(t) = b_start + (b_end - b_start) t / tau on [0, tau].
struct RampProtocol {
    enum class Direction { expansion, compression };

    double b_start = 0.0;
    double b_end = 0.0;
    double tau = 0.0;
    Direction direction = Direction::expansion;

    [[nodiscard]] double field(double t) const noexcept {
        if (tau <= 0.0) return b_end;
        return b_start + (b_end - b_start) * t / tau;
    }

    static RampProtocol expansion(const EngineParams& p, double tau) {
        return RampProtocol{p.B_h, p.B_c, tau, Direction::expansion};
    }
    static RampProtocol compression(const EngineParams& p, double tau) {
        return RampProtocol{p.B_c, p.B_h, tau, Direction::compression};
    }
};

/// Sampled time evolution of one stroke.
struct Trajectory {
    std::vector<double> times;
    std::vector<QuantumState> states;
    std::vector<double> fields;    ///< B at each sample
    std::vector<double> energies;  ///< Tr[Tr_ph(rho) H_s(B)] at each sample

    double min_eigenvalue = 0.0;        ///< lowest state eigenvalue over samples
    double max_trace_drift_rate = 0.0;  ///< max |Tr rho - 1| / dt before renormalization
    double max_purity_drift = 0.0;      ///< max |Tr rho^2 - Tr rho0^2| over samples

    [[nodiscard]] const QuantumState& final_state() const { return states.back(); }
    [[nodiscard]] double duration() const { return times.back() - times.front(); }
};

/// Largest step accepted by the propagators.
inline double max_time_step(const EngineParams& p) {
    const double shift = std::abs(ddi_coefficients(p).omega12) / p.omega;
    const double scale = std::max({1.0, shift, p.B_h / p.omega});
    return std::min(0.01, 0.1 / scale) / p.omega;
}

namespace detail {

inline double reduced_energy(const ComplexMatrix& rho, const ComplexMatrix& h_s, std::size_t n_ph) {
    // Tr[Tr_ph(rho) h_s] = Σ_{ab} h_s(b,a) Σ_n rho(a n, b n)
    cplx acc{};
    for (std::size_t a = 0; a < 4; ++a)
        for (std::size_t b = 0; b < 4; ++b) {
            const cplx hba = h_s(b, a);
            if (hba == cplx{}) continue;
            cplx s{};
            for (std::size_t n = 0; n < n_ph; ++n) s += rho(a * n_ph + n, b * n_ph + n);
            acc += hba * s;
        }
    return acc.real();
}

/// (rho + rho^dagger)/2 followed by unit-trace renormalization, in place.
inline void restore_state(ComplexMatrix& rho) {
    rho = rho.hermitian_part();
    const double tr = rho.trace().real();
    rho *= cplx{1.0 / tr, 0.0};
}

inline void check_step(double dt, double dt_max) {
    if (!(dt > 0.0)) throw InvalidArgument{"propagation: dt must be > 0"};
    if (dt > dt_max * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << "propagation: dt = " << dt << " exceeds the stability limit " << dt_max;
        throw InvalidArgument{msg.str()};
    }
}

struct Recorder {
    Trajectory traj;
    double purity0 = 0.0;

    void record(double t, const ComplexMatrix& rho, const std::vector<std::size_t>& dims, double field,
                const ComplexMatrix& h_s, std::size_t n_ph) {
        QuantumState s{rho, dims};
        const auto diag = s.diagnostics();
        if (!diag.valid()) {
            std::ostringstream msg;
            msg << "state invariant violated at t = " << t << " (hermiticity " << diag.hermiticity_error
                << ", trace error " << diag.trace_error << ", min eigenvalue " << diag.min_eigenvalue
                << "); step too large?";
            throw NumericalError{msg.str()};
        }
        const double purity = s.purity();
        if (traj.states.empty()) {
            purity0 = purity;
            traj.min_eigenvalue = diag.min_eigenvalue;
        }
        traj.min_eigenvalue = std::min(traj.min_eigenvalue, diag.min_eigenvalue);
        traj.max_purity_drift = std::max(traj.max_purity_drift, std::abs(purity - purity0));
        traj.times.push_back(t);
        traj.fields.push_back(field);
        traj.energies.push_back(reduced_energy(rho, h_s, n_ph));
        traj.states.push_back(std::move(s));
    }
};

/// Splits [0, total] into steps of `dt` with a shortened final step.
inline std::pair<std::size_t, double> step_plan(double total, double dt) {
    if (total <= 0.0) return {0, 0.0};
    auto n = static_cast<std::size_t>(std::ceil(total / dt - 1e-9));
    n = std::max<std::size_t>(n, 1);
    const double last = total - static_cast<double>(n - 1) * dt;
    return {n, last};
}

} // namespace detail

// ---------------------------------------------------------------------------
// Lindblad generator at fixed field B_h

/// Generator of the thermalization stroke:
///   drho/dt = -i[H, rho] + Σ_s d_s (2 L rho L^† - {L^†L, rho}) + u_s (2 L^† rho L - {L L^†, rho})
/// with H the total Hamiltonian at B_h.
class LindbladGenerator {
public:
    explicit LindbladGenerator(const EngineParams& p, bool with_phonon_coupling = true)
        : dim_{p.dim()}, hamiltonian_{build_total_hamiltonian(p, p.B_h, with_phonon_coupling)} {
        ComplexMatrix anti{dim_};
        for (const auto& ch : jump_operators(p)) {
            const ComplexMatrix up = ch.lowering.adjoint();
            if (ch.down_rate > 0.0) {
                jumps_.push_back({ch.lowering, up, 2.0 * ch.down_rate});
                anti += ch.down_rate * (up * ch.lowering);
            }
            if (ch.up_rate > 0.0) {
                jumps_.push_back({up, ch.lowering, 2.0 * ch.up_rate});
                anti += ch.up_rate * (ch.lowering * up);
            }
        }
        // H_eff = H - i K, so -i(H_eff rho - rho H_eff^†) = -i[H, rho] - {K, rho}.
        effective_ = hamiltonian_ - cplx{0.0, 1.0} * anti;
        effective_adj_ = effective_.adjoint();
    }

    [[nodiscard]] const ComplexMatrix& hamiltonian() const noexcept { return hamiltonian_; }
    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }

    [[nodiscard]] ComplexMatrix apply(const ComplexMatrix& rho) const {
        const cplx minus_i{0.0, -1.0};
        ComplexMatrix out = minus_i * (effective_ * rho - rho * effective_adj_);
        for (const auto& j : jumps_) out += j.weight * (j.op * rho * j.op_adj);
        return out;
    }

    /// Matrix of the generator acting on row-major vec(rho).
    [[nodiscard]] ComplexMatrix superoperator() const {
        const std::size_t n = dim_;
        ComplexMatrix s{n * n};
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                ComplexMatrix e{n};
                e(i, j) = 1.0;
                const auto col = apply(e);
                for (std::size_t k = 0; k < n * n; ++k) s(k, i * n + j) = col.data()[k];
            }
        return s;
    }

private:
    struct Jump {
        ComplexMatrix op, op_adj;
        double weight;
    };

    std::size_t dim_;
    ComplexMatrix hamiltonian_;
    ComplexMatrix effective_, effective_adj_;
    std::vector<Jump> jumps_;
};

inline ComplexMatrix lindblad_rhs(const QuantumState& rho, const EngineParams& p, bool with_phonon_coupling = true) {
    if (rho.dim() != p.dim()) throw DimensionError{"lindblad_rhs: state dimension does not match parameters"};
    return LindbladGenerator{p, with_phonon_coupling}.apply(rho.matrix());
}

namespace detail {

/// One classical RK4 step for a linear autonomous system v' = S v equals
/// v <- (I + hS + (hS)^2/2 + (hS)^3/6 + (hS)^4/24) v.
inline ComplexMatrix rk4_step_matrix(const ComplexMatrix& super, double h) {
    const std::size_t n = super.dim();
    ComplexMatrix hs = h * super;
    ComplexMatrix term = ComplexMatrix::identity(n);
    ComplexMatrix step = term;
    for (int k = 1; k <= 4; ++k) {
        term = (1.0 / k) * (hs * term);
        step += term;
    }
    return step;
}

inline void apply_in_place(const ComplexMatrix& step, ComplexMatrix& rho, std::vector<cplx>& scratch) {
    const std::size_t n = step.dim();
    auto v = rho.data();
    scratch.assign(n, cplx{});
    for (std::size_t i = 0; i < n; ++i) {
        cplx acc{};
        const cplx* row = &step(i, 0);
        for (std::size_t j = 0; j < n; ++j) acc += row[j] * v[j];
        scratch[i] = acc;
    }
    std::copy(scratch.begin(), scratch.end(), v.begin());
}

} // namespace detail

/// Fixed-step RK4 integration of the Lindblad equation at B = B_h for t1.
inline Trajectory propagate_lindblad(const QuantumState& rho0, const EngineParams& p, double t1,
                                     const PropagationOptions& opt = {}) {
    if (!(t1 >= 0.0)) throw InvalidArgument{"propagate_lindblad: t1 must be >= 0"};
    if (rho0.dim() != p.dim()) throw DimensionError{"propagate_lindblad: state dimension does not match parameters"};
    detail::check_step(opt.dt, max_time_step(p));

    const auto h_s = build_system_hamiltonian(p, p.B_h);
    detail::Recorder rec;
    rec.record(0.0, rho0.matrix(), rho0.dims(), p.B_h, h_s, p.n_ph);
    if (t1 == 0.0) return std::move(rec.traj);

    const LindbladGenerator gen{p, opt.thermalize_with_phonon};
    const ComplexMatrix super = gen.superoperator();
    const auto [nsteps, last] = detail::step_plan(t1, opt.dt);
    const ComplexMatrix step = detail::rk4_step_matrix(super, opt.dt);
    const ComplexMatrix last_step = detail::rk4_step_matrix(super, last);

    ComplexMatrix rho = rho0.matrix();
    std::vector<cplx> scratch;
    const std::size_t stride = std::max<std::size_t>(opt.sample_stride, 1);
    for (std::size_t k = 1; k <= nsteps; ++k) {
        const bool final = k == nsteps;
        const double h = final ? last : opt.dt;
        detail::apply_in_place(final ? last_step : step, rho, scratch);
        const double drift = std::abs(rho.trace() - cplx{1.0, 0.0});
        rec.traj.max_trace_drift_rate = std::max(rec.traj.max_trace_drift_rate, drift / h);
        detail::restore_state(rho);
        if (final || k % stride == 0) {
            const double t = final ? t1 : static_cast<double>(k) * opt.dt;
            rec.record(t, rho, rho0.dims(), p.B_h, h_s, p.n_ph);
        }
    }
    return std::move(rec.traj);
}

/// Lindblad propagation until max|rhs| < tol (checked at every sample) or t_cap.
inline Trajectory propagate_to_steady_state(const QuantumState& rho0, const EngineParams& p,
                                            const PropagationOptions& opt = {}, double tol = 1e-9,
                                            double t_cap = std::numeric_limits<double>::quiet_NaN()) {
    if (std::isnan(t_cap)) t_cap = 2000.0 / p.omega;
    detail::check_step(opt.dt, max_time_step(p));
    const auto h_s = build_system_hamiltonian(p, p.B_h);
    const LindbladGenerator gen{p, opt.thermalize_with_phonon};
    const ComplexMatrix step = detail::rk4_step_matrix(gen.superoperator(), opt.dt);
    const std::size_t stride = std::max<std::size_t>(opt.sample_stride, 1);

    detail::Recorder rec;
    rec.record(0.0, rho0.matrix(), rho0.dims(), p.B_h, h_s, p.n_ph);
    ComplexMatrix rho = rho0.matrix();
    std::vector<cplx> scratch;
    const auto max_steps = static_cast<std::size_t>(std::ceil(t_cap / opt.dt));
    for (std::size_t k = 1; k <= max_steps; ++k) {
        detail::apply_in_place(step, rho, scratch);
        const double drift = std::abs(rho.trace() - cplx{1.0, 0.0});
        rec.traj.max_trace_drift_rate = std::max(rec.traj.max_trace_drift_rate, drift / opt.dt);
        detail::restore_state(rho);
        if (k % stride == 0 || k == max_steps) {
            const double residual = gen.apply(rho).max_abs();
            rec.record(static_cast<double>(k) * opt.dt, rho, rho0.dims(), p.B_h, h_s, p.n_ph);
            if (residual < tol) return std::move(rec.traj);
        }
    }
    std::ostringstream msg;
    msg << "steady-state detection reached the cap t = " << t_cap << " before max|rhs| < " << tol;
    log::warn(msg.str());
    return std::move(rec.traj);
}

/// RK4 integration of drho/dt = -i[H(B(t)), rho] along a linear ramp.
/// tau = 0 is the sudden limit: the state is returned unchanged.
inline Trajectory propagate_unitary(const QuantumState& rho0, const EngineParams& p, const RampProtocol& ramp,
                                    const PropagationOptions& opt = {}) {
    if (!(ramp.tau >= 0.0)) throw InvalidArgument{"propagate_unitary: tau must be >= 0"};
    if (rho0.dim() != p.dim()) throw DimensionError{"propagate_unitary: state dimension does not match parameters"};
    detail::check_step(opt.dt, max_time_step(p));

    const auto atomic_ops = AtomicOperators::make();
    const ComplexMatrix h_s0 = build_system_hamiltonian(p, 0.0);
    const ComplexMatrix z_atomic = atomic_ops.sz[0] + atomic_ops.sz[1];
    auto h_s_at = [&](double b) { return h_s0 + b * z_atomic; };

    detail::Recorder rec;
    rec.record(0.0, rho0.matrix(), rho0.dims(), ramp.field(0.0), h_s_at(ramp.field(0.0)), p.n_ph);
    if (ramp.tau == 0.0) {
        // Sudden quench: only the Hamiltonian label switches.
        rec.traj.fields.back() = ramp.b_end;
        rec.traj.energies.back() = detail::reduced_energy(rho0.matrix(), h_s_at(ramp.b_end), p.n_ph);
        return std::move(rec.traj);
    }

    const ComplexMatrix h_base = build_total_hamiltonian(p, 0.0);
    const ComplexMatrix z_full = field_operator(p.n_ph);
    const cplx minus_i{0.0, -1.0};
    auto rhs = [&](double t, const ComplexMatrix& rho) {
        const ComplexMatrix h = h_base + ramp.field(t) * z_full;
        return minus_i * (h * rho - rho * h);
    };

    const auto [nsteps, last] = detail::step_plan(ramp.tau, opt.dt);
    const std::size_t stride = std::max<std::size_t>(opt.sample_stride, 1);
    ComplexMatrix rho = rho0.matrix();
    double t = 0.0;
    for (std::size_t k = 1; k <= nsteps; ++k) {
        const bool final = k == nsteps;
        const double h = final ? last : opt.dt;
        const ComplexMatrix k1 = rhs(t, rho);
        const ComplexMatrix k2 = rhs(t + 0.5 * h, rho + (0.5 * h) * k1);
        const ComplexMatrix k3 = rhs(t + 0.5 * h, rho + (0.5 * h) * k2);
        const ComplexMatrix k4 = rhs(t + h, rho + h * k3);
        rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t = final ? ramp.tau : static_cast<double>(k) * opt.dt;
        const double drift = std::abs(rho.trace() - cplx{1.0, 0.0});
        rec.traj.max_trace_drift_rate = std::max(rec.traj.max_trace_drift_rate, drift / h);
        detail::restore_state(rho);
        if (final || k % stride == 0) {
            const double b = ramp.field(t);
            rec.record(t, rho, rho0.dims(), b, h_s_at(b), p.n_ph);
        }
    }
    return std::move(rec.traj);
}

/// Ideal adiabatic transport: populations in the eigenbasis of h_start are
/// carried to the eigenvectors of h_end that continue them along the linear
/// homotopy (maximal-overlap pairing); eigenbasis coherences are dropped.
inline QuantumState adiabatic_map(const QuantumState& rho0, const ComplexMatrix& h_start, const ComplexMatrix& h_end,
                                  std::size_t homotopy_points = 32) {
    const std::size_t n = rho0.dim();
    if (h_start.dim() != n || h_end.dim() != n) throw DimensionError{"adiabatic_map: Hamiltonian dimension differs from state"};
    if (homotopy_points < 1) throw InvalidArgument{"adiabatic_map: need at least one homotopy point"};

    const auto start = herm_eig(h_start);
    std::vector<double> populations(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto v = start.vectors.column(k);
        cplx acc{};
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) acc += std::conj(v[i]) * rho0.matrix()(i, j) * v[j];
        populations[k] = acc.real();
    }

    ComplexMatrix tracked = start.vectors;
    for (std::size_t step = 1; step <= homotopy_points; ++step) {
        const double s = static_cast<double>(step) / static_cast<double>(homotopy_points);
        const ComplexMatrix h = (1.0 - s) * h_start + s * h_end;
        const auto eig = herm_eig(h);

        std::vector<std::size_t> pairing(n);
        std::vector<bool> taken(n, false);
        for (std::size_t i = 0; i < n; ++i) {
            double best = -1.0;
            double second = -1.0;
            std::size_t best_j = 0;
            std::size_t second_j = 0;
            for (std::size_t j = 0; j < n; ++j) {
                cplx ov{};
                for (std::size_t r = 0; r < n; ++r) ov += std::conj(tracked(r, i)) * eig.vectors(r, j);
                const double mag = std::abs(ov);
                if (mag > best) {
                    second = best;
                    second_j = best_j;
                    best = mag;
                    best_j = j;
                } else if (mag > second) {
                    second = mag;
                    second_j = j;
                }
            }
            if (best - second < 1e-6 || taken[best_j]) {
                std::ostringstream msg;
                msg << "adiabatic_map: ambiguous eigenvector pairing at homotopy step " << step << " for level " << i
                    << " (candidates " << best_j << " and " << (taken[best_j] ? best_j : second_j)
                    << ", overlaps " << best << ", " << second << ")";
                throw NumericalError{msg.str()};
            }
            taken[best_j] = true;
            pairing[i] = best_j;
        }
        ComplexMatrix next{n};
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t r = 0; r < n; ++r) next(r, i) = eig.vectors(r, pairing[i]);
        tracked = std::move(next);
    }

    ComplexMatrix out{n};
    for (std::size_t k = 0; k < n; ++k) {
        if (populations[k] == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) out(i, j) += populations[k] * tracked(i, k) * std::conj(tracked(j, k));
    }
    out = out.hermitian_part();
    return QuantumState{std::move(out), rho0.dims()};
}

/// Populations of `rho` in the eigenbasis of `h`, ordered by ascending energy.
inline std::vector<double> eigenbasis_populations(const QuantumState& rho, const ComplexMatrix& h) {
    const auto eig = herm_eig(h);
    const std::size_t n = rho.dim();
    std::vector<double> pops(n);
    for (std::size_t k = 0; k < n; ++k) {
        cplx acc{};
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                acc += std::conj(eig.vectors(i, k)) * rho.matrix()(i, j) * eig.vectors(j, k);
        pops[k] = acc.real();
    }
    return pops;
}

} // namespace ottosim
