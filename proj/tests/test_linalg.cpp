#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "ottosim/linalg.hpp"
#include "support.hpp"

using namespace ottosim;
using Catch::Approx;
using testing::diag;
using testing::Gen;
using testing::pauli_x;

namespace {

ComplexMatrix reconstruct(const HermitianEigen& e) {
    return spectral_map(e, [](double x) { return x; });
}

double gram_error(const ComplexMatrix& v) {
    return max_abs_diff(v.adjoint() * v, ComplexMatrix::identity(v.dim()));
}

} // namespace

TEST_CASE("kron: small cases") {
    const auto i2 = ComplexMatrix::identity(2);
    CHECK(kron(i2, i2) == ComplexMatrix::identity(4));
    CHECK(kron(diag({1, -1}), i2) == diag({1, 1, -1, -1}));

    const auto xx = kron(pauli_x(), pauli_x());
    const std::vector<cplx> e0{1.0, 0.0, 0.0, 0.0};
    const auto out = xx.apply(e0);
    CHECK(out == std::vector<cplx>{0.0, 0.0, 0.0, 1.0});
}

TEST_CASE("kron: entry formula and associativity") {
    // Small-integer entries keep every product exact.
    Gen gen{11};
    auto integer_matrix = [&](std::size_t n) {
        ComplexMatrix m{n};
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) m(i, j) = cplx{std::round(4 * gen.normal()), std::round(4 * gen.normal())};
        return m;
    };
    for (int trial = 0; trial < 10; ++trial) {
        const auto a = integer_matrix(2);
        const auto b = integer_matrix(3);
        const auto c = integer_matrix(2);
        const auto ab = kron(a, b);
        REQUIRE(ab.dim() == 6);
        for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t j = 0; j < 6; ++j) CHECK(ab(i, j) == a(i / 3, j / 3) * b(i % 3, j % 3));
        CHECK(kron(kron(a, b), c) == kron(a, kron(b, c)));
        CHECK(kron({a, b, c}) == kron(a, kron(b, c)));
    }
}

TEST_CASE("matrix arithmetic rejects mismatched dimensions") {
    ComplexMatrix a{2}, b{3};
    CHECK_THROWS_AS(a + b, DimensionError);
    CHECK_THROWS_AS(a * b, DimensionError);
    CHECK_THROWS_AS(a -= b, DimensionError);
}

TEST_CASE("herm_eig: diagonal input") {
    const auto e = herm_eig(diag({3, 1, 2}));
    CHECK(e.values == std::vector<double>{1, 2, 3});
    CHECK(std::abs(e.vectors(1, 0)) == Approx(1.0));
    CHECK(std::abs(e.vectors(2, 1)) == Approx(1.0));
    CHECK(std::abs(e.vectors(0, 2)) == Approx(1.0));
}

TEST_CASE("herm_eig: Pauli x") {
    const auto e = herm_eig(pauli_x());
    CHECK(e.values[0] == Approx(-1.0).margin(1e-14));
    CHECK(e.values[1] == Approx(1.0).margin(1e-14));
    const double r = 1.0 / std::sqrt(2.0);
    // Phase convention makes the first component real and positive.
    CHECK(std::abs(e.vectors(0, 0) - cplx{r}) < 1e-12);
    CHECK(std::abs(e.vectors(1, 0) - cplx{-r}) < 1e-12);
    CHECK(std::abs(e.vectors(0, 1) - cplx{r}) < 1e-12);
    CHECK(std::abs(e.vectors(1, 1) - cplx{r}) < 1e-12);
}

TEST_CASE("herm_eig: random Hermitian reconstruction and orthonormality") {
    Gen gen{2024};
    for (std::size_t n : {1u, 2u, 4u, 8u, 12u, 16u}) {
        for (int trial = 0; trial < 5; ++trial) {
            const auto h = gen.hermitian(n);
            const auto e = herm_eig(h);
            CHECK(std::is_sorted(e.values.begin(), e.values.end()));
            CHECK(max_abs_diff(reconstruct(e), h) < 1e-10);
            CHECK(gram_error(e.vectors) < 1e-10);
        }
    }
}

TEST_CASE("herm_eig: degenerate spectrum") {
    Gen gen{5};
    // U diag(1,1,2,2) U^dagger
    const auto u = herm_eig(gen.hermitian(4)).vectors;
    const auto h = u * diag({1, 1, 2, 2}) * u.adjoint();
    const auto e = herm_eig(h);
    CHECK(e.values[0] == Approx(1.0));
    CHECK(e.values[1] == Approx(1.0));
    CHECK(e.values[3] == Approx(2.0));
    CHECK(max_abs_diff(reconstruct(e), h) < 1e-10);
    CHECK(gram_error(e.vectors) < 1e-10);
}

TEST_CASE("herm_eig: non-Hermitian input is an error") {
    ComplexMatrix m{2};
    m(0, 1) = 1.0;
    CHECK_THROWS_AS(herm_eig(m), InvalidArgument);
}

TEST_CASE("sqrtm_psd") {
    CHECK(max_abs_diff(sqrtm_psd(ComplexMatrix::identity(3)), ComplexMatrix::identity(3)) < 1e-14);
    CHECK(max_abs_diff(sqrtm_psd(diag({4, 9})), diag({2, 3})) < 1e-14);

    Gen gen{77};
    for (int trial = 0; trial < 10; ++trial) {
        const auto rho = gen.density(6);
        const auto r = sqrtm_psd(rho);
        CHECK(r.hermiticity_error() < 1e-12);
        CHECK(herm_eig(r.hermitian_part()).values.front() > -1e-12);
        CHECK(max_abs_diff(r * r, rho) < 1e-9);
    }

    // Within tolerance: clamped. Beyond: error.
    CHECK(max_abs_diff(sqrtm_psd(diag({1, -1e-9})), diag({1, 0})) < 1e-14);
    CHECK_THROWS_AS(sqrtm_psd(diag({1, -1e-6})), NumericalError);
}

TEST_CASE("QuantumState validation") {
    CHECK_THROWS_AS(QuantumState(ComplexMatrix{4}, {2, 3}), DimensionError);
    CHECK_NOTHROW(QuantumState::validated(diag({0.5, 0.5}), {2}));
    CHECK_THROWS_AS(QuantumState::validated(diag({0.5, 0.6}), {2}), NumericalError);
    CHECK_THROWS_AS(QuantumState::validated(diag({1.1, -0.1}), {2}), NumericalError);
    ComplexMatrix skew = diag({0.5, 0.5});
    skew(0, 1) = 1e-6;
    CHECK_THROWS_AS(QuantumState::validated(skew, {2}), NumericalError);

    const QuantumState mixed{diag({0.5, 0.5}), {2}};
    CHECK(mixed.purity() == Approx(0.5));
}

TEST_CASE("partial_trace: product states") {
    Gen gen{3};
    const auto ra = gen.density(2);
    const auto rb = gen.density(3);
    const QuantumState ab{kron(ra, rb), {2, 3}};
    const auto a = partial_trace(ab, {0});
    const auto b = partial_trace(ab, {1});
    CHECK(a.dims() == std::vector<std::size_t>{2});
    CHECK(max_abs_diff(a.matrix(), ra) < 1e-14);
    CHECK(max_abs_diff(b.matrix(), rb) < 1e-14);
}

TEST_CASE("partial_trace: Bell state reduces to maximally mixed") {
    const double r = 1.0 / std::sqrt(2.0);
    const std::vector<cplx> phi{r, 0.0, 0.0, r};
    const QuantumState bell{ComplexMatrix::outer(phi, phi), {2, 2}};
    CHECK(max_abs_diff(partial_trace(bell, {1}).matrix(), diag({0.5, 0.5})) < 1e-15);
}

TEST_CASE("partial_trace: trace preservation and composition") {
    Gen gen{19};
    for (int trial = 0; trial < 5; ++trial) {
        const QuantumState rho{gen.density(12), {2, 2, 3}};
        for (const std::vector<std::size_t>& keep :
             {std::vector<std::size_t>{0}, {1}, {2}, {0, 1}, {0, 2}, {1, 2}, {0, 1, 2}}) {
            const auto red = partial_trace(rho, keep);
            CHECK(std::abs(red.matrix().trace() - cplx{1.0}) < 1e-13);
            CHECK(red.dims().size() == keep.size());
        }
        const auto stepwise = partial_trace(partial_trace(rho, {0, 1}), {0});
        const auto direct = partial_trace(rho, {0});
        CHECK(max_abs_diff(stepwise.matrix(), direct.matrix()) < 1e-12);
        CHECK(partial_trace(rho, {0, 1, 2}).matrix() == rho.matrix());
    }
}

TEST_CASE("partial_trace: invalid keep sets") {
    const QuantumState rho{diag({0.25, 0.25, 0.25, 0.25}), {2, 2}};
    CHECK_THROWS_AS(partial_trace(rho, {}), InvalidArgument);
    CHECK_THROWS_AS(partial_trace(rho, {2}), InvalidArgument);
}

TEST_CASE("uhlmann_fidelity: basic cases") {
    Gen gen{8};
    const auto rho = gen.density(4);
    CHECK(uhlmann_fidelity(rho, rho) == Approx(1.0).margin(1e-9));
    CHECK(uhlmann_fidelity(diag({1, 0}), diag({0, 1})) == Approx(0.0).margin(1e-12));
    CHECK_THROWS_AS(uhlmann_fidelity(diag({1, 0}), diag({1, 0, 0})), DimensionError);
}

TEST_CASE("uhlmann_fidelity: pure pairs equal the overlap modulus") {
    Gen gen{99};
    for (int trial = 0; trial < 20; ++trial) {
        const auto psi = gen.unit_vector(4);
        const auto phi = gen.unit_vector(4);
        const double expected = std::abs(testing::inner(psi, phi));
        const double f = uhlmann_fidelity(ComplexMatrix::outer(psi, psi), ComplexMatrix::outer(phi, phi));
        CHECK(f == Approx(expected).margin(1e-7));
    }
}

TEST_CASE("uhlmann_fidelity: pure versus mixed") {
    Gen gen{123};
    for (int trial = 0; trial < 20; ++trial) {
        const auto psi = gen.unit_vector(4);
        const auto sigma = gen.density(4);
        const double expected = std::sqrt(testing::inner(psi, sigma.apply(psi)).real());
        CHECK(uhlmann_fidelity(ComplexMatrix::outer(psi, psi), sigma) == Approx(expected).margin(1e-7));
    }
}

TEST_CASE("uhlmann_fidelity: commuting states and symmetry") {
    // Diagonal states: F = sum sqrt(p_i q_i)
    const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
    const std::vector<double> q{0.4, 0.3, 0.2, 0.1};
    double expected = 0.0;
    for (std::size_t i = 0; i < 4; ++i) expected += std::sqrt(p[i] * q[i]);
    CHECK(uhlmann_fidelity(ComplexMatrix::diagonal(p), ComplexMatrix::diagonal(q)) == Approx(expected).epsilon(1e-12));

    Gen gen{4};
    for (int trial = 0; trial < 20; ++trial) {
        const auto a = gen.density(4);
        const auto b = gen.density(4);
        const double fab = uhlmann_fidelity(a, b);
        CHECK(std::abs(fab - uhlmann_fidelity(b, a)) < 1e-9);
        CHECK(fab >= 0.0);
        CHECK(fab < 1.0 - 1e-6);
    }
}
