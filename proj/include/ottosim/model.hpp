#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

#include "ottosim/error.hpp"
#include "ottosim/linalg.hpp"

// Two dipole-coupled trapped atoms plus one truncated phonon mode.
//
// Single-atom basis: index 0 = |g>, index 1 = |e>, so sigma = |g><e| and
// sigma^z = |e><e| - |g><g|. The full space is atom1 ⊗ atom2 ⊗ phonon and
// |gg, 0> is basis index 0.
namespace ottosim {

/// Physical parameters, in units where the trap frequency sets the scale
/// (defaults use omega = 1).
struct EngineParams {
    double omega = 1.0;               ///< trap frequency
    double g = 0.2;                   ///< transverse drive
    double B_h = 10.0;                ///< hot longitudinal field
    double B_c = 5.0;                 ///< cold longitudinal field
    double chi1 = 0.04;               ///< atom 1 - phonon coupling
    double chi2 = 0.04;               ///< atom 2 - phonon coupling
    double Gamma = 0.1;               ///< effective single-atom decay rate
    double theta = std::numbers::pi / 2.0;  ///< dipole polarization angle (rad)
    double xi = 0.2;                  ///< dimensionless separation |k| |r12|
    double nbar = 0.1;                ///< reservoir occupation
    std::size_t n_ph = 2;             ///< phonon truncation

    void validate() const {
        auto fail = [](const char* what) { throw InvalidArgument{std::string{"EngineParams: "} + what}; };
        if (!(omega > 0.0)) fail("omega must be > 0");
        if (!(Gamma >= 0.0)) fail("Gamma must be >= 0");
        if (!(nbar >= 0.0)) fail("nbar must be >= 0");
        if (!(xi > 0.0)) fail("xi must be > 0");
        if (!(B_c > 0.0)) fail("B_c must be > 0");
        if (!(B_h > B_c)) fail("B_h must exceed B_c");
        if (n_ph < 2) fail("n_ph must be >= 2");
    }

    /// Multiplies every energy/rate by `factor` (times then scale by 1/factor).
    [[nodiscard]] EngineParams rescaled(double factor) const {
        EngineParams p = *this;
        p.omega *= factor;
        p.g *= factor;
        p.B_h *= factor;
        p.B_c *= factor;
        p.chi1 *= factor;
        p.chi2 *= factor;
        p.Gamma *= factor;
        return p;
    }

    [[nodiscard]] std::vector<std::size_t> dims() const { return {2, 2, n_ph}; }
    [[nodiscard]] std::size_t dim() const { return 4 * n_ph; }
};

// ---------------------------------------------------------------------------
// Photon-mediated dipole-dipole couplings

struct DDICoefficients {
    double omega12 = 0.0;  ///< coherent frequency shift
    double gamma12 = 0.0;  ///< collective decay
    double gamma_plus = 0.0;
    double gamma_minus = 0.0;

    /// True when |gamma12| exceeds the individual rate (a negative channel).
    [[nodiscard]] bool exceeds_individual(double gamma) const noexcept {
        return std::abs(gamma12) > gamma + 1e-12;
    }
};

inline DDICoefficients ddi_coefficients(double xi, double theta, double Gamma) {
    if (!(xi > 0.0)) {
        std::ostringstream msg;
        msg << "ddi_coefficients: separation xi must be > 0 (got " << xi << ")";
        throw InvalidArgument{msg.str()};
    }
    const double c2 = std::cos(theta) * std::cos(theta);
    const double s = std::sin(xi);
    const double c = std::cos(xi);
    const double xi2 = xi * xi;
    const double xi3 = xi2 * xi;

    DDICoefficients d;
    d.omega12 = 0.75 * Gamma * (-(1.0 - c2) * c / xi + (1.0 - 3.0 * c2) * (s / xi2 + c / xi3));
    d.gamma12 = 1.5 * Gamma * ((1.0 - c2) * s / xi + (1.0 - 3.0 * c2) * (c / xi2 - s / xi3));
    d.gamma_plus = Gamma + d.gamma12;
    d.gamma_minus = Gamma - d.gamma12;
    return d;
}

inline DDICoefficients ddi_coefficients(const EngineParams& p) { return ddi_coefficients(p.xi, p.theta, p.Gamma); }

// ---------------------------------------------------------------------------
// Operators

/// Single-atom and collective operators on the two-atom space (4x4).
struct AtomicOperators {
    std::array<ComplexMatrix, 2> sx, sz, raise, lower;

    static AtomicOperators make() {
        ComplexMatrix lo{2};
        lo(0, 1) = 1.0;  // |g><e|
        const ComplexMatrix hi = lo.adjoint();
        const ComplexMatrix z = hi * lo - lo * hi;
        const ComplexMatrix x = hi + lo;
        const auto id = ComplexMatrix::identity(2);

        AtomicOperators ops;
        ops.lower = {kron(lo, id), kron(id, lo)};
        ops.raise = {kron(hi, id), kron(id, hi)};
        ops.sz = {kron(z, id), kron(id, z)};
        ops.sx = {kron(x, id), kron(id, x)};
        return ops;
    }
};

/// Operators embedded in the full atom1 ⊗ atom2 ⊗ phonon space.
struct OperatorSet {
    std::size_t n_ph = 0;
    std::array<ComplexMatrix, 2> sx, sz, raise, lower;
    ComplexMatrix a, adag;
    /// Collective lowering sigma_± = (sigma_1 ± sigma_2)/sqrt(2); index 0 is '+', 1 is '-'.
    std::array<ComplexMatrix, 2> collective_lower, collective_raise;

    static OperatorSet make(std::size_t n_ph) {
        if (n_ph < 1) throw InvalidArgument{"OperatorSet: phonon dimension must be >= 1"};
        const auto atomic = AtomicOperators::make();
        const auto id_ph = ComplexMatrix::identity(n_ph);
        ComplexMatrix a_ph{n_ph};
        for (std::size_t n = 1; n < n_ph; ++n) a_ph(n - 1, n) = std::sqrt(static_cast<double>(n));

        OperatorSet ops;
        ops.n_ph = n_ph;
        for (std::size_t i = 0; i < 2; ++i) {
            ops.sx[i] = kron(atomic.sx[i], id_ph);
            ops.sz[i] = kron(atomic.sz[i], id_ph);
            ops.raise[i] = kron(atomic.raise[i], id_ph);
            ops.lower[i] = kron(atomic.lower[i], id_ph);
        }
        ops.a = kron(ComplexMatrix::identity(4), a_ph);
        ops.adag = ops.a.adjoint();
        const double r = 1.0 / std::sqrt(2.0);
        ops.collective_lower = {r * (ops.lower[0] + ops.lower[1]), r * (ops.lower[0] - ops.lower[1])};
        ops.collective_raise = {ops.collective_lower[0].adjoint(), ops.collective_lower[1].adjoint()};
        return ops;
    }
};

// ---------------------------------------------------------------------------
// Hamiltonians

/// H_s(B) = g Σ σ^x_i + B Σ σ^z_i + Ω12 (σ_1^† σ_2 + σ_2^† σ_1) on the atomic space.
inline ComplexMatrix build_system_hamiltonian(const EngineParams& p, double B) {
    static const AtomicOperators ops = AtomicOperators::make();
    const double omega12 = ddi_coefficients(p).omega12;
    ComplexMatrix h = p.g * (ops.sx[0] + ops.sx[1]);
    h += B * (ops.sz[0] + ops.sz[1]);
    h += omega12 * (ops.raise[0] * ops.lower[1] + ops.raise[1] * ops.lower[0]);
    return h;
}

/// H = H_s ⊗ I + omega a^†a + Σ chi_i (a σ_i^† + a^† σ_i) on the full space.
/// `with_coupling = false` drops the atom-phonon exchange term.
inline ComplexMatrix build_total_hamiltonian(const EngineParams& p, double B, bool with_coupling = true) {
    const auto ops = OperatorSet::make(p.n_ph);
    ComplexMatrix h = kron(build_system_hamiltonian(p, B), ComplexMatrix::identity(p.n_ph));
    h += p.omega * (ops.adag * ops.a);
    if (with_coupling) {
        const std::array<double, 2> chi{p.chi1, p.chi2};
        for (std::size_t i = 0; i < 2; ++i) {
            h += chi[i] * (ops.a * ops.raise[i] + ops.adag * ops.lower[i]);
        }
    }
    return h;
}

/// Σ σ^z_i on the full space; H(B1) - H(B2) = (B1 - B2) * field_operator.
inline ComplexMatrix field_operator(std::size_t n_ph) {
    const auto ops = OperatorSet::make(n_ph);
    return ops.sz[0] + ops.sz[1];
}

// ---------------------------------------------------------------------------
// Temperature and thermal states

/// Inverse temperature (k_B = 1) with an explicit zero-temperature marker.
class InverseTemperature {
public:
    static InverseTemperature finite(double beta) {
        if (!(beta >= 0.0) || !std::isfinite(beta)) throw InvalidArgument{"InverseTemperature: beta must be finite and >= 0"};
        return InverseTemperature{beta, false};
    }
    static InverseTemperature zero_temperature() { return InverseTemperature{0.0, true}; }

    [[nodiscard]] bool is_zero_temperature() const noexcept { return zero_; }
    [[nodiscard]] double value() const {
        if (zero_) throw InvalidArgument{"InverseTemperature: beta is infinite at zero temperature"};
        return beta_;
    }

private:
    InverseTemperature(double beta, bool zero) : beta_{beta}, zero_{zero} {}
    double beta_;
    bool zero_;
};

/// Solves nbar = 1 / (exp(2 beta B_h) - 1) for beta.
inline InverseTemperature beta_from_nbar(double nbar, double B_h) {
    if (!(B_h > 0.0)) throw InvalidArgument{"beta_from_nbar: B_h must be > 0"};
    if (!(nbar >= 0.0)) throw InvalidArgument{"beta_from_nbar: nbar must be >= 0"};
    if (nbar == 0.0) return InverseTemperature::zero_temperature();
    return InverseTemperature::finite(std::log1p(1.0 / nbar) / (2.0 * B_h));
}

/// exp(-beta h) / Z; the zero-temperature marker yields the normalized
/// projector onto the ground space.
inline QuantumState gibbs_state(const ComplexMatrix& h, const InverseTemperature& beta,
                                std::vector<std::size_t> dims = {2, 2}) {
    const auto eig = herm_eig(h);
    const double e0 = eig.values.front();
    std::vector<double> w(eig.values.size());
    if (beta.is_zero_temperature()) {
        const double tol = 1e-9 * std::max(1.0, h.max_abs());
        for (std::size_t k = 0; k < w.size(); ++k) w[k] = (eig.values[k] - e0) <= tol ? 1.0 : 0.0;
    } else {
        for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::exp(-beta.value() * (eig.values[k] - e0));
    }
    double z = 0.0;
    for (double x : w) z += x;
    for (double& x : w) x /= z;
    const auto rho = spectral_map(HermitianEigen{w, eig.vectors}, [](double x) { return x; });
    return QuantumState{rho.hermitian_part(), std::move(dims)};
}

/// F = -beta^-1 ln Tr exp(-beta h); the ground energy at zero temperature.
inline double free_energy(const ComplexMatrix& h, const InverseTemperature& beta) {
    const auto eig = herm_eig(h);
    const double e0 = eig.values.front();
    if (beta.is_zero_temperature()) return e0;
    const double b = beta.value();
    if (b == 0.0) throw InvalidArgument{"free_energy: infinite temperature has no finite free energy"};
    double z = 0.0;
    for (double e : eig.values) z += std::exp(-b * (e - e0));
    return e0 - std::log(z) / b;
}

// ---------------------------------------------------------------------------
// Dissipation channels

struct JumpChannel {
    char label = '+';          ///< '+' symmetric, '-' antisymmetric
    ComplexMatrix lowering;    ///< sigma_s on the full space
    double down_rate = 0.0;    ///< gamma_s (nbar + 1) / 2
    double up_rate = 0.0;      ///< gamma_s nbar / 2
};

inline std::vector<JumpChannel> jump_operators(const EngineParams& p) {
    const auto d = ddi_coefficients(p);
    const auto ops = OperatorSet::make(p.n_ph);
    std::vector<JumpChannel> channels;
    const std::array<double, 2> gammas{d.gamma_plus, d.gamma_minus};
    for (std::size_t s = 0; s < 2; ++s) {
        double gs = gammas[s];
        if (gs < -1e-12) {
            std::ostringstream msg;
            msg << "jump_operators: collective rate gamma_" << (s == 0 ? '+' : '-') << " = " << gs
                << " is negative (|gamma12| > Gamma)";
            throw InvalidArgument{msg.str()};
        }
        gs = std::max(gs, 0.0);
        channels.push_back(JumpChannel{s == 0 ? '+' : '-', ops.collective_lower[s], gs * (p.nbar + 1.0) / 2.0,
                                       gs * p.nbar / 2.0});
    }
    return channels;
}

/// |gg><gg| ⊗ |0><0|.
inline QuantumState ground_vacuum_state(std::size_t n_ph) {
    ComplexMatrix m{4 * n_ph};
    m(0, 0) = 1.0;
    return QuantumState{std::move(m), {2, 2, n_ph}};
}

/// Embeds an atomic density matrix with the phonon in vacuum.
inline QuantumState with_phonon_vacuum(const QuantumState& atomic, std::size_t n_ph) {
    ComplexMatrix vac{n_ph};
    vac(0, 0) = 1.0;
    return QuantumState{kron(atomic.matrix(), vac), {2, 2, n_ph}};
}

} // namespace ottosim
