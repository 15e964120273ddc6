#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ottosim/error.hpp"
#include "ottosim/log.hpp"

namespace ottosim {

using cplx = std::complex<double>;

// State tolerances shared by every module.
inline constexpr double tol_herm = 1e-10;
inline constexpr double tol_tr = 1e-9;
inline constexpr double tol_pos = 1e-8;

/// Dense square complex matrix, row-major.
class ComplexMatrix {
public:
    ComplexMatrix() = default;
    explicit ComplexMatrix(std::size_t dim) : dim_{dim}, data_(dim * dim) {}

    static ComplexMatrix identity(std::size_t dim) {
        ComplexMatrix m{dim};
        for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
        return m;
    }

    static ComplexMatrix diagonal(std::span<const double> values) {
        ComplexMatrix m{values.size()};
        for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
        return m;
    }

    /// |v><w|
    static ComplexMatrix outer(std::span<const cplx> v, std::span<const cplx> w) {
        if (v.size() != w.size()) throw DimensionError{"outer: vector lengths differ"};
        ComplexMatrix m{v.size()};
        for (std::size_t i = 0; i < v.size(); ++i)
            for (std::size_t j = 0; j < w.size(); ++j) m(i, j) = v[i] * std::conj(w[j]);
        return m;
    }

    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }

    cplx& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * dim_ + j]; }
    const cplx& operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * dim_ + j]; }

    [[nodiscard]] std::span<cplx> data() noexcept { return data_; }
    [[nodiscard]] std::span<const cplx> data() const noexcept { return data_; }

    [[nodiscard]] std::vector<cplx> column(std::size_t j) const {
        std::vector<cplx> c(dim_);
        for (std::size_t i = 0; i < dim_; ++i) c[i] = (*this)(i, j);
        return c;
    }

    ComplexMatrix& operator+=(const ComplexMatrix& o) {
        require_same(o, "+=");
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
        return *this;
    }
    ComplexMatrix& operator-=(const ComplexMatrix& o) {
        require_same(o, "-=");
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
        return *this;
    }
    ComplexMatrix& operator*=(cplx s) noexcept {
        for (auto& x : data_) x *= s;
        return *this;
    }

    friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
    friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
    friend ComplexMatrix operator*(ComplexMatrix a, cplx s) { return a *= s; }
    friend ComplexMatrix operator*(cplx s, ComplexMatrix a) { return a *= s; }
    friend ComplexMatrix operator*(double s, ComplexMatrix a) { return a *= cplx{s, 0.0}; }

    friend ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
        a.require_same(b, "*");
        const std::size_t n = a.dim_;
        ComplexMatrix c{n};
        for (std::size_t i = 0; i < n; ++i) {
            cplx* crow = &c.data_[i * n];
            for (std::size_t k = 0; k < n; ++k) {
                const cplx aik = a.data_[i * n + k];
                if (aik == cplx{}) continue;
                const cplx* brow = &b.data_[k * n];
                for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
            }
        }
        return c;
    }

    /// Matrix-vector product.
    [[nodiscard]] std::vector<cplx> apply(std::span<const cplx> v) const {
        if (v.size() != dim_) throw DimensionError{"apply: vector length differs from matrix dimension"};
        std::vector<cplx> out(dim_);
        for (std::size_t i = 0; i < dim_; ++i) {
            cplx acc{};
            for (std::size_t j = 0; j < dim_; ++j) acc += (*this)(i, j) * v[j];
            out[i] = acc;
        }
        return out;
    }

    [[nodiscard]] ComplexMatrix adjoint() const {
        ComplexMatrix t{dim_};
        for (std::size_t i = 0; i < dim_; ++i)
            for (std::size_t j = 0; j < dim_; ++j) t(j, i) = std::conj((*this)(i, j));
        return t;
    }

    [[nodiscard]] cplx trace() const noexcept {
        cplx t{};
        for (std::size_t i = 0; i < dim_; ++i) t += (*this)(i, i);
        return t;
    }

    [[nodiscard]] double max_abs() const noexcept {
        double m = 0.0;
        for (const auto& x : data_) m = std::max(m, std::abs(x));
        return m;
    }

    /// max |A - A^dagger| entrywise.
    [[nodiscard]] double hermiticity_error() const noexcept {
        double m = 0.0;
        for (std::size_t i = 0; i < dim_; ++i)
            for (std::size_t j = i; j < dim_; ++j)
                m = std::max(m, std::abs((*this)(i, j) - std::conj((*this)(j, i))));
        return m;
    }

    /// (A + A^dagger) / 2
    [[nodiscard]] ComplexMatrix hermitian_part() const {
        ComplexMatrix h{dim_};
        for (std::size_t i = 0; i < dim_; ++i)
            for (std::size_t j = 0; j < dim_; ++j)
                h(i, j) = 0.5 * ((*this)(i, j) + std::conj((*this)(j, i)));
        return h;
    }

    friend bool operator==(const ComplexMatrix&, const ComplexMatrix&) = default;

private:
    void require_same(const ComplexMatrix& o, const char* op) const {
        if (dim_ != o.dim_) {
            std::ostringstream msg;
            msg << "matrix operator" << op << ": dimension mismatch " << dim_ << " vs " << o.dim_;
            throw DimensionError{msg.str()};
        }
    }

    std::size_t dim_ = 0;
    std::vector<cplx> data_;
};

inline double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.dim() != b.dim()) throw DimensionError{"max_abs_diff: dimension mismatch"};
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a.data()[k] - b.data()[k]));
    return m;
}

inline ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) { return a * b - b * a; }

/// Kronecker product, row-major convention: (a⊗b)(i*nb+k, j*nb+l) = a(i,j) b(k,l).
inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    const std::size_t na = a.dim();
    const std::size_t nb = b.dim();
    ComplexMatrix c{na * nb};
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < na; ++j) {
            const cplx aij = a(i, j);
            if (aij == cplx{}) continue;
            for (std::size_t k = 0; k < nb; ++k)
                for (std::size_t l = 0; l < nb; ++l) c(i * nb + k, j * nb + l) = aij * b(k, l);
        }
    return c;
}

inline ComplexMatrix kron(std::initializer_list<ComplexMatrix> factors) {
    ComplexMatrix out = ComplexMatrix::identity(1);
    for (const auto& f : factors) out = kron(out, f);
    return out;
}

// ---------------------------------------------------------------------------
// Hermitian eigendecomposition (cyclic complex Jacobi)

struct HermitianEigen {
    std::vector<double> values;  ///< ascending
    ComplexMatrix vectors;       ///< column k is the eigenvector of values[k]
};

namespace detail {

inline double off_diagonal_norm(const ComplexMatrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i)
        for (std::size_t j = 0; j < a.dim(); ++j)
            if (i != j) s += std::norm(a(i, j));
    return std::sqrt(s);
}

inline double frobenius_norm(const ComplexMatrix& a) {
    double s = 0.0;
    for (const auto& x : a.data()) s += std::norm(x);
    return std::sqrt(s);
}

} // namespace detail

inline HermitianEigen herm_eig(const ComplexMatrix& h) {
    const std::size_t n = h.dim();
    const double scale = std::max(1.0, h.max_abs());
    if (h.hermiticity_error() > tol_herm * scale) {
        std::ostringstream msg;
        msg << "herm_eig: input is not Hermitian (max|h - h^dagger| = " << h.hermiticity_error() << ")";
        throw InvalidArgument{msg.str()};
    }

    ComplexMatrix a = h.hermitian_part();
    ComplexMatrix v = ComplexMatrix::identity(n);
    const double threshold = 1e-14 * std::max(1.0, detail::frobenius_norm(a));
    constexpr int max_sweeps = 100;

    int sweep = 0;
    while (detail::off_diagonal_norm(a) > threshold) {
        if (++sweep > max_sweeps) throw NumericalError{"herm_eig: Jacobi iteration did not converge"};
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const cplx apq = a(p, q);
                const double mag = std::abs(apq);
                if (mag == 0.0) continue;
                const cplx phase = apq / mag;
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                const double theta = (aqq - app) / (2.0 * mag);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                // Unitary acting on the (p, q) plane.
                const cplx upp = c;
                const cplx upq = s;
                const cplx uqp = -s * std::conj(phase);
                const cplx uqq = c * std::conj(phase);

                for (std::size_t k = 0; k < n; ++k) {
                    const cplx akp = a(k, p);
                    const cplx akq = a(k, q);
                    a(k, p) = akp * upp + akq * uqp;
                    a(k, q) = akp * upq + akq * uqq;
                    const cplx vkp = v(k, p);
                    const cplx vkq = v(k, q);
                    v(k, p) = vkp * upp + vkq * uqp;
                    v(k, q) = vkp * upq + vkq * uqq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const cplx apk = a(p, k);
                    const cplx aqk = a(q, k);
                    a(p, k) = std::conj(upp) * apk + std::conj(uqp) * aqk;
                    a(q, k) = std::conj(upq) * apk + std::conj(uqq) * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                a(p, p) = a(p, p).real();
                a(q, q) = a(q, q).real();
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a(x, x).real() < a(y, y).real(); });

    HermitianEigen out{std::vector<double>(n), ComplexMatrix{n}};
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t src = order[k];
        out.values[k] = a(src, src).real();
        // Phase convention: first non-negligible component real and positive.
        cplx ph{1.0, 0.0};
        for (std::size_t i = 0; i < n; ++i) {
            if (std::abs(v(i, src)) > 1e-8) {
                ph = std::conj(v(i, src)) / std::abs(v(i, src));
                break;
            }
        }
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, src) * ph;
    }
    return out;
}

/// V f(diag) V^dagger for a real function applied to the spectrum.
template <class F>
ComplexMatrix spectral_map(const HermitianEigen& eig, F&& f) {
    const std::size_t n = eig.values.size();
    ComplexMatrix out{n};
    for (std::size_t k = 0; k < n; ++k) {
        const double fk = f(eig.values[k]);
        if (fk == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) {
            const cplx vik = eig.vectors(i, k) * fk;
            for (std::size_t j = 0; j < n; ++j) out(i, j) += vik * std::conj(eig.vectors(j, k));
        }
    }
    return out;
}

/// Principal square root of a positive semidefinite Hermitian matrix.
/// Eigenvalues in [-tol_pos, 0) are clamped to zero.
inline ComplexMatrix sqrtm_psd(const ComplexMatrix& m) {
    const auto eig = herm_eig(m);
    const double lowest = eig.values.empty() ? 0.0 : eig.values.front();
    if (lowest < -tol_pos) {
        std::ostringstream msg;
        msg << "sqrtm_psd: eigenvalue " << lowest << " below -" << tol_pos << " (corrupted state)";
        throw NumericalError{msg.str()};
    }
    if (lowest < -1e-12) {
        std::ostringstream msg;
        msg << "sqrtm_psd: clamping negative eigenvalue " << lowest;
        log::warn(msg.str());
    }
    return spectral_map(eig, [](double x) { return x > 0.0 ? std::sqrt(x) : 0.0; });
}

// ---------------------------------------------------------------------------
// Quantum states

struct StateDiagnostics {
    double hermiticity_error = 0.0;
    double trace_error = 0.0;
    double min_eigenvalue = 0.0;

    [[nodiscard]] bool valid() const noexcept {
        return hermiticity_error <= tol_herm && trace_error <= tol_tr && min_eigenvalue >= -tol_pos;
    }
};

/// Density matrix tagged with its subsystem layout. The global order is
/// atom1 ⊗ atom2 ⊗ phonon.
class QuantumState {
public:
    QuantumState() = default;

    QuantumState(ComplexMatrix matrix, std::vector<std::size_t> dims)
        : matrix_{std::move(matrix)}, dims_{std::move(dims)} {
        const std::size_t prod =
            std::accumulate(dims_.begin(), dims_.end(), std::size_t{1}, std::multiplies<>{});
        if (dims_.empty() || prod != matrix_.dim()) {
            std::ostringstream msg;
            msg << "QuantumState: subsystem dimensions multiply to " << prod << " but matrix has dimension "
                << matrix_.dim();
            throw DimensionError{msg.str()};
        }
    }

    /// Constructs and checks the Hermiticity/trace/positivity contract.
    static QuantumState validated(ComplexMatrix matrix, std::vector<std::size_t> dims) {
        QuantumState s{std::move(matrix), std::move(dims)};
        s.validate();
        return s;
    }

    [[nodiscard]] const ComplexMatrix& matrix() const noexcept { return matrix_; }
    [[nodiscard]] const std::vector<std::size_t>& dims() const noexcept { return dims_; }
    [[nodiscard]] std::size_t dim() const noexcept { return matrix_.dim(); }

    [[nodiscard]] StateDiagnostics diagnostics() const {
        StateDiagnostics d;
        d.hermiticity_error = matrix_.hermiticity_error();
        d.trace_error = std::abs(matrix_.trace() - cplx{1.0, 0.0});
        d.min_eigenvalue = herm_eig(matrix_.hermitian_part()).values.front();
        return d;
    }

    void validate() const {
        const auto d = diagnostics();
        if (!d.valid()) {
            std::ostringstream msg;
            msg << "QuantumState invariant violated: hermiticity " << d.hermiticity_error << ", trace error "
                << d.trace_error << ", min eigenvalue " << d.min_eigenvalue;
            throw NumericalError{msg.str()};
        }
    }

    [[nodiscard]] double purity() const {
        return (matrix_ * matrix_).trace().real();
    }

private:
    ComplexMatrix matrix_;
    std::vector<std::size_t> dims_;
};

/// Traces out every subsystem not listed in `keep`; kept subsystems stay in
/// their original order.
inline QuantumState partial_trace(const QuantumState& state, std::vector<std::size_t> keep) {
    const auto& dims = state.dims();
    if (keep.empty()) throw InvalidArgument{"partial_trace: keep set is empty"};
    std::sort(keep.begin(), keep.end());
    keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
    if (keep.back() >= dims.size()) {
        std::ostringstream msg;
        msg << "partial_trace: keep index " << keep.back() << " out of range for " << dims.size() << " subsystems";
        throw InvalidArgument{msg.str()};
    }

    const std::size_t nsub = dims.size();
    std::vector<bool> kept(nsub, false);
    for (auto k : keep) kept[k] = true;

    std::vector<std::size_t> out_dims;
    std::size_t traced_dim = 1;
    for (std::size_t s = 0; s < nsub; ++s) {
        if (kept[s]) out_dims.push_back(dims[s]);
        else traced_dim *= dims[s];
    }
    const std::size_t out_dim =
        std::accumulate(out_dims.begin(), out_dims.end(), std::size_t{1}, std::multiplies<>{});

    // Full index from a kept multi-index (encoded as out index) and traced multi-index.
    auto compose = [&](std::size_t kept_index, std::size_t traced_index) {
        std::size_t full = 0;
        std::size_t kept_rest = kept_index;
        std::size_t traced_rest = traced_index;
        // Decode from the last subsystem backwards (row-major, last index fastest).
        std::vector<std::size_t> digits(nsub);
        for (std::size_t s = nsub; s-- > 0;) {
            if (kept[s]) {
                digits[s] = kept_rest % dims[s];
                kept_rest /= dims[s];
            } else {
                digits[s] = traced_rest % dims[s];
                traced_rest /= dims[s];
            }
        }
        for (std::size_t s = 0; s < nsub; ++s) full = full * dims[s] + digits[s];
        return full;
    };

    const auto& m = state.matrix();
    ComplexMatrix out{out_dim};
    for (std::size_t t = 0; t < traced_dim; ++t) {
        std::vector<std::size_t> full_index(out_dim);
        for (std::size_t k = 0; k < out_dim; ++k) full_index[k] = compose(k, t);
        for (std::size_t i = 0; i < out_dim; ++i)
            for (std::size_t j = 0; j < out_dim; ++j) out(i, j) += m(full_index[i], full_index[j]);
    }
    return QuantumState{std::move(out), std::move(out_dims)};
}

/// Uhlmann fidelity Tr sqrt(sqrt(sigma) rho sqrt(sigma)), clamped to [0, 1].
inline double uhlmann_fidelity(const ComplexMatrix& rho, const ComplexMatrix& sigma) {
    if (rho.dim() != sigma.dim()) {
        std::ostringstream msg;
        msg << "uhlmann_fidelity: dimension mismatch " << rho.dim() << " vs " << sigma.dim();
        throw DimensionError{msg.str()};
    }
    const ComplexMatrix root = sqrtm_psd(sigma.hermitian_part());
    const ComplexMatrix inner = (root * rho.hermitian_part() * root).hermitian_part();
    const auto eig = herm_eig(inner);
    double f = 0.0;
    for (double x : eig.values) f += x > 0.0 ? std::sqrt(x) : 0.0;
    if (f > 1.0 + 1e-9 || f < -1e-9) {
        std::ostringstream msg;
        msg << "uhlmann_fidelity: raw value " << f << " outside [0, 1]";
        log::warn(msg.str());
    }
    return std::clamp(f, 0.0, 1.0);
}

inline double uhlmann_fidelity(const QuantumState& rho, const QuantumState& sigma) {
    if (rho.dims() != sigma.dims()) throw DimensionError{"uhlmann_fidelity: subsystem layouts differ"};
    return uhlmann_fidelity(rho.matrix(), sigma.matrix());
}

} // namespace ottosim
