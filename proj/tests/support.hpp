#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "ottosim/linalg.hpp"

namespace testing {

using ottosim::ComplexMatrix;
using ottosim::cplx;

/// Seeded generators for property tests.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_{seed} {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>{lo, hi}(rng_); }
    double normal() { return std::normal_distribution<double>{0.0, 1.0}(rng_); }
    cplx cnormal() {
        const double re = normal();
        const double im = normal();
        return {re, im};
    }

    ComplexMatrix matrix(std::size_t n) {
        ComplexMatrix m{n};
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) m(i, j) = cnormal();
        return m;
    }

    ComplexMatrix hermitian(std::size_t n) {
        auto m = matrix(n);
        return 0.5 * (m + m.adjoint());
    }

    std::vector<cplx> unit_vector(std::size_t n) {
        std::vector<cplx> v(n);
        double norm = 0.0;
        for (auto& x : v) {
            x = cnormal();
            norm += std::norm(x);
        }
        for (auto& x : v) x /= std::sqrt(norm);
        return v;
    }

    /// Random full-rank density matrix G G† / Tr.
    ComplexMatrix density(std::size_t n) {
        auto g = matrix(n);
        auto rho = g * g.adjoint();
        rho *= cplx{1.0 / rho.trace().real(), 0.0};
        return rho.hermitian_part();
    }

    ComplexMatrix pure(std::size_t n) {
        const auto v = unit_vector(n);
        return ComplexMatrix::outer(v, v);
    }

private:
    std::mt19937_64 rng_;
};

inline cplx inner(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    cplx s{};
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

inline ComplexMatrix diag(std::initializer_list<double> d) {
    std::vector<double> v{d};
    return ComplexMatrix::diagonal(v);
}

inline ComplexMatrix pauli_x() {
    ComplexMatrix m{2};
    m(0, 1) = 1.0;
    m(1, 0) = 1.0;
    return m;
}

} // namespace testing
