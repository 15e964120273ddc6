#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "ottosim/model.hpp"
#include "support.hpp"

using namespace ottosim;
using Catch::Approx;
using testing::diag;

namespace {

constexpr double pi = std::numbers::pi;

// Scalar closed forms, written out independently of the library.
double omega12_ref(double x, double t, double G) {
    const double c = std::cos(t) * std::cos(t);
    return 0.75 * G * (-(1 - c) * std::cos(x) / x + (1 - 3 * c) * (std::sin(x) / (x * x) + std::cos(x) / (x * x * x)));
}
double gamma12_ref(double x, double t, double G) {
    const double c = std::cos(t) * std::cos(t);
    return 1.5 * G * ((1 - c) * std::sin(x) / x + (1 - 3 * c) * (std::cos(x) / (x * x) - std::sin(x) / (x * x * x)));
}

std::vector<double> eigen_populations(const ComplexMatrix& rho, const ComplexMatrix& h) {
    const auto e = herm_eig(h);
    std::vector<double> pops;
    for (std::size_t k = 0; k < e.values.size(); ++k) {
        const auto v = e.vectors.column(k);
        pops.push_back(testing::inner(v, rho.apply(v)).real());
    }
    return pops;
}

EngineParams bare(double xi = 1e6) {
    EngineParams p;
    p.g = 0.0;
    p.chi1 = p.chi2 = 0.0;
    p.xi = xi;
    return p;
}

} // namespace

TEST_CASE("EngineParams defaults and validation") {
    const EngineParams p;
    CHECK(p.omega == 1.0);
    CHECK(p.g == 0.2);
    CHECK(p.B_h == 10.0);
    CHECK(p.B_c == 5.0);
    CHECK(p.chi1 == 0.04);
    CHECK(p.chi2 == 0.04);
    CHECK(p.Gamma == 0.1);
    CHECK(p.theta == pi / 2);
    CHECK(p.nbar == 0.1);
    CHECK(p.n_ph == 2);
    CHECK_NOTHROW(p.validate());

    auto bad = [](auto mutate) {
        EngineParams q;
        mutate(q);
        return q;
    };
    CHECK_THROWS_AS(bad([](EngineParams& q) { q.omega = 0; }).validate(), InvalidArgument);
    CHECK_THROWS_AS(bad([](EngineParams& q) { q.Gamma = -0.1; }).validate(), InvalidArgument);
    CHECK_THROWS_AS(bad([](EngineParams& q) { q.nbar = -1; }).validate(), InvalidArgument);
    CHECK_THROWS_AS(bad([](EngineParams& q) { q.xi = 0; }).validate(), InvalidArgument);
    CHECK_THROWS_AS(bad([](EngineParams& q) { q.B_c = 10; }).validate(), InvalidArgument);
    CHECK_THROWS_AS(bad([](EngineParams& q) { q.n_ph = 1; }).validate(), InvalidArgument);
}

TEST_CASE("ddi_coefficients: frozen reference values") {
    const auto d02 = ddi_coefficients(0.2, pi / 2, 0.1);
    CHECK(d02.omega12 == Approx(9.19310419581191446).epsilon(1e-13));
    CHECK(d02.gamma12 == Approx(0.0992017125935542384).epsilon(1e-13));
    CHECK(d02.gamma_plus == Approx(0.1 + 0.0992017125935542384).epsilon(1e-13));
    CHECK(d02.gamma_minus == Approx(0.1 - 0.0992017125935542384).epsilon(1e-10));

    const auto d019 = ddi_coefficients(0.19, pi / 2, 0.1);
    CHECK(d019.omega12 == Approx(10.7424960519945178).epsilon(1e-13));
    CHECK(d019.gamma12 == Approx(0.0992793950524665434).epsilon(1e-13));

    const auto far = ddi_coefficients(100.0, pi / 2, 0.1);
    CHECK(far.omega12 == Approx(-6.50472222608664565e-4).epsilon(1e-10));
    CHECK(far.gamma12 == Approx(-7.46537723734156468e-4).epsilon(1e-10));
    CHECK(std::abs(far.omega12) < 1e-3);
    CHECK(std::abs(far.gamma12) < 1e-3);

    const auto oblique = ddi_coefficients(0.7, 0.3, 0.1);
    CHECK(oblique.omega12 == Approx(-0.469194935820182930).epsilon(1e-13));
    CHECK(oblique.gamma12 == Approx(0.0947718235884009712).epsilon(1e-13));
}

TEST_CASE("ddi_coefficients: match scalar formulas on a grid") {
    for (double x = 0.05; x < 30.0; x *= 1.37) {
        for (double t = 0.0; t <= pi; t += pi / 12) {
            const auto d = ddi_coefficients(x, t, 0.1);
            CHECK(d.omega12 == Approx(omega12_ref(x, t, 0.1)).epsilon(1e-12).margin(1e-15));
            CHECK(d.gamma12 == Approx(gamma12_ref(x, t, 0.1)).epsilon(1e-12).margin(1e-15));
        }
    }
}

TEST_CASE("ddi_coefficients: Dicke limit and singular separation") {
    // Cancellation in the 1/xi^3 terms limits how close to zero this can be probed.
    const auto d = ddi_coefficients(1e-3, pi / 2, 0.1);
    CHECK(d.gamma12 == Approx(0.1).margin(1e-6));
    CHECK(d.gamma_plus == Approx(0.2).margin(1e-6));
    CHECK(std::abs(d.gamma_minus) < 1e-6);
    CHECK_THROWS_AS(ddi_coefficients(0.0, pi / 2, 0.1), InvalidArgument);
    CHECK_THROWS_AS(ddi_coefficients(-1.0, pi / 2, 0.1), InvalidArgument);
}

TEST_CASE("ddi_coefficients: symmetric under theta -> pi - theta") {
    for (double x = 0.1; x < 20.0; x += 0.37)
        for (double t = 0.0; t <= pi / 2; t += pi / 24) {
            const auto a = ddi_coefficients(x, t, 0.1);
            const auto b = ddi_coefficients(x, pi - t, 0.1);
            CHECK(a.omega12 == Approx(b.omega12).margin(1e-12));
            CHECK(a.gamma12 == Approx(b.gamma12).margin(1e-12));
        }
}

TEST_CASE("ddi_coefficients: collective decay bounded by single-atom rate at theta = pi/2") {
    for (double x = 1e-3; x < 50.0; x += 0.01) {
        const auto d = ddi_coefficients(x, pi / 2, 0.1);
        CHECK_FALSE(d.exceeds_individual(0.1));
        CHECK(d.gamma_minus >= -1e-12);
    }
    DDICoefficients big{0.0, 0.2, 0.3, -0.1};
    CHECK(big.exceeds_individual(0.1));
}

TEST_CASE("ddi_coefficients: zeros of gamma12 on [1, 15]") {
    // Bisection on sign changes of the library function, compared with roots
    // located independently at high precision.
    const std::vector<double> expected{2.74370726999226938, 6.11676426446176893, 9.31661562856596451,
                                       12.4859373681995978};
    auto f = [](double x) { return ddi_coefficients(x, pi / 2, 0.1).gamma12; };
    std::vector<double> roots;
    const double h = 0.01;
    for (double x = 1.0; x + h <= 15.0; x += h) {
        double a = x, b = x + h;
        if (f(a) * f(b) > 0) continue;
        for (int it = 0; it < 80; ++it) {
            const double m = 0.5 * (a + b);
            (f(a) * f(m) <= 0 ? b : a) = m;
        }
        roots.push_back(0.5 * (a + b));
    }
    REQUIRE(roots.size() >= 4);
    REQUIRE(roots.size() == expected.size());
    for (std::size_t k = 0; k < roots.size(); ++k) CHECK(roots[k] == Approx(expected[k]).margin(1e-9));
}

TEST_CASE("operators: Pauli relations and collective completeness") {
    const auto ops = OperatorSet::make(3);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(ops.sz[i] == ops.raise[i] * ops.lower[i] - ops.lower[i] * ops.raise[i]);
        CHECK(ops.sx[i] == ops.raise[i] + ops.lower[i]);
    }
    const auto lhs = ops.collective_lower[0] * ops.collective_raise[0] + ops.collective_lower[1] * ops.collective_raise[1];
    const auto rhs = ops.lower[0] * ops.raise[0] + ops.lower[1] * ops.raise[1];
    CHECK(max_abs_diff(lhs, rhs) < 1e-15);

    // [a, a^dagger] = I except on the highest kept level.
    const auto comm = commutator(ops.a, ops.adag);
    for (std::size_t k = 0; k < comm.dim(); ++k) {
        const double expected = (k % 3 == 2) ? -2.0 : 1.0;
        CHECK(comm(k, k).real() == Approx(expected));
    }
}

TEST_CASE("build_system_hamiltonian") {
    SECTION("uncoupled spectrum") {
        const auto e = herm_eig(build_system_hamiltonian(bare(1e9), 10.0));
        CHECK(e.values[0] == Approx(-20.0));
        CHECK(e.values[1] == Approx(0.0).margin(1e-6));
        CHECK(e.values[2] == Approx(0.0).margin(1e-6));
        CHECK(e.values[3] == Approx(20.0));
    }
    SECTION("exchange splits the single-excitation pair") {
        const auto p = bare(0.5);
        const double om = ddi_coefficients(p).omega12;
        const auto e = herm_eig(build_system_hamiltonian(p, 3.0));
        std::vector<double> mid{e.values[1], e.values[2]};
        std::sort(mid.begin(), mid.end());
        CHECK(mid[0] == Approx(-std::abs(om)));
        CHECK(mid[1] == Approx(std::abs(om)));
        const auto h = build_system_hamiltonian(p, 3.0);
        CHECK(h(1, 2) == cplx{om});  // |ge> <-> |eg>
        CHECK(h(2, 1) == cplx{om});
    }
    SECTION("Hermitian and linear in B") {
        for (double xi : {0.19, 0.2, 1.0, 7.3}) {
            EngineParams p;
            p.xi = xi;
            const auto h1 = build_system_hamiltonian(p, 7.5);
            CHECK(h1.hermiticity_error() == 0.0);
            const auto h2 = build_system_hamiltonian(p, 5.0);
            const auto ops = AtomicOperators::make();
            CHECK(max_abs_diff(h1 - h2, 2.5 * (ops.sz[0] + ops.sz[1])) < 1e-13);
        }
    }
    SECTION("traceless") {
        CHECK(std::abs(build_system_hamiltonian(EngineParams{}, 10.0).trace()) < 1e-13);
    }
}

TEST_CASE("build_total_hamiltonian") {
    SECTION("decoupled spectrum is a sum of spectra") {
        EngineParams p;
        p.chi1 = p.chi2 = 0.0;
        p.n_ph = 3;
        const auto hs = herm_eig(build_system_hamiltonian(p, 10.0)).values;
        std::vector<double> expected;
        for (double e : hs)
            for (int n = 0; n < 3; ++n) expected.push_back(e + n * p.omega);
        std::sort(expected.begin(), expected.end());
        const auto got = herm_eig(build_total_hamiltonian(p, 10.0)).values;
        for (std::size_t k = 0; k < got.size(); ++k) CHECK(got[k] == Approx(expected[k]).margin(1e-10));
    }
    SECTION("single-quantum exchange matrix element") {
        EngineParams p;
        p.chi1 = 0.03;
        p.chi2 = 0.05;
        const auto h = build_total_hamiltonian(p, 10.0);
        // |gg,1> = 1, |eg,0> = 4, |ge,0> = 2
        CHECK(h(1, 4) == cplx{0.03});
        CHECK(h(4, 1) == cplx{0.03});
        CHECK(h(1, 2) == cplx{0.05});
        CHECK(h.hermiticity_error() == 0.0);
    }
    SECTION("field operator gives the B dependence") {
        const EngineParams p;
        const auto diff = build_total_hamiltonian(p, 10.0) - build_total_hamiltonian(p, 5.0);
        CHECK(max_abs_diff(diff, 5.0 * field_operator(p.n_ph)) < 1e-13);
    }
}

TEST_CASE("beta_from_nbar") {
    const auto b = beta_from_nbar(0.1, 10.0);
    CHECK(b.value() == Approx(0.119894763639918527).epsilon(1e-14));
    for (double nbar : {1e-3, 0.1, 1.0, 10.0, 123.0}) {
        const double beta = beta_from_nbar(nbar, 10.0).value();
        CHECK(1.0 / std::expm1(2 * beta * 10.0) == Approx(nbar).epsilon(1e-12));
    }
    CHECK(beta_from_nbar(1e12, 10.0).value() < 1e-12);
    CHECK(beta_from_nbar(0.0, 10.0).is_zero_temperature());
    CHECK_THROWS_AS(beta_from_nbar(0.0, 10.0).value(), InvalidArgument);
    CHECK_THROWS_AS(beta_from_nbar(-1.0, 10.0), InvalidArgument);
}

TEST_CASE("gibbs_state") {
    SECTION("infinite temperature") {
        const auto rho = gibbs_state(build_system_hamiltonian(EngineParams{}, 10.0), InverseTemperature::finite(0.0));
        CHECK(max_abs_diff(rho.matrix(), diag({0.25, 0.25, 0.25, 0.25})) < 1e-14);
    }
    SECTION("two-level populations") {
        const auto p = bare();
        const auto rho = gibbs_state(build_system_hamiltonian(p, 10.0), beta_from_nbar(0.1, 10.0));
        const QuantumState atom1 = partial_trace(rho, {0});
        CHECK(atom1.matrix()(1, 1).real() == Approx(1.0 / 12.0).margin(1e-6));
        CHECK(partial_trace(rho, {1}).matrix()(1, 1).real() == Approx(1.0 / 12.0).margin(1e-6));
        // Energy: 2 * 10 * (1/12 - 11/12)
        const cplx u = (rho.matrix() * build_system_hamiltonian(p, 10.0)).trace();
        CHECK(u.real() == Approx(-50.0 / 3.0).margin(1e-5));
    }
    SECTION("commutes with h; populations decrease with energy") {
        for (double xi : {0.19, 0.2, 0.5, 3.0}) {
            EngineParams p;
            p.xi = xi;
            const auto h = build_system_hamiltonian(p, 10.0);
            const auto rho = gibbs_state(h, beta_from_nbar(0.1, 10.0));
            CHECK(std::abs(rho.matrix().trace() - cplx{1.0}) < 1e-12);
            CHECK(commutator(h, rho.matrix()).max_abs() < 1e-10);
            const auto pops = eigen_populations(rho.matrix(), h);
            for (std::size_t k = 0; k + 1 < pops.size(); ++k) CHECK(pops[k] > pops[k + 1]);
        }
    }
    SECTION("zero temperature gives the normalized ground-space projector") {
        const auto rho = gibbs_state(diag({2, -1, 0, -1}), InverseTemperature::zero_temperature());
        CHECK(max_abs_diff(rho.matrix(), diag({0, 0.5, 0, 0.5})) < 1e-14);
    }
}

TEST_CASE("free_energy: two-level partition function") {
    const auto p = bare();
    const double beta = beta_from_nbar(0.1, 10.0).value();
    for (double B : {5.0, 7.5, 10.0}) {
        const double z = std::pow(2.0 * std::cosh(beta * B), 2);
        CHECK(free_energy(build_system_hamiltonian(p, B), InverseTemperature::finite(beta)) ==
              Approx(-std::log(z) / beta).epsilon(1e-9));
    }
    CHECK(free_energy(diag({3, 1, 2}), InverseTemperature::zero_temperature()) == 1.0);
}

TEST_CASE("jump_operators") {
    SECTION("Dicke limit keeps only the symmetric channel") {
        EngineParams p;
        p.xi = 1e-4;
        const auto ch = jump_operators(p);
        REQUIRE(ch.size() == 2);
        CHECK(ch[0].label == '+');
        CHECK(ch[0].down_rate == Approx(0.2 * 1.1 / 2).epsilon(1e-8));
        CHECK(ch[0].up_rate == Approx(0.2 * 0.1 / 2).epsilon(1e-8));
        CHECK(ch[1].down_rate < 1e-9);
        CHECK(ch[1].up_rate < 1e-9);
    }
    SECTION("independent atoms at large separation") {
        EngineParams p;
        p.xi = 100.0;
        const auto ch = jump_operators(p);
        for (const auto& c : ch) {
            CHECK(c.down_rate == Approx(0.1 * 1.1 / 2).epsilon(0.01));
            CHECK(c.up_rate == Approx(0.1 * 0.1 / 2).epsilon(0.01));
        }
    }
    SECTION("rates follow gamma_plus and gamma_minus") {
        const EngineParams p;
        const auto d = ddi_coefficients(p);
        const auto ch = jump_operators(p);
        CHECK(ch[0].down_rate == d.gamma_plus * 1.1 / 2);
        CHECK(ch[1].up_rate == d.gamma_minus * 0.1 / 2);
    }
}

TEST_CASE("reference states") {
    const auto rho0 = ground_vacuum_state(2);
    CHECK(rho0.dims() == std::vector<std::size_t>{2, 2, 2});
    CHECK(rho0.matrix()(0, 0) == cplx{1.0});
    CHECK(rho0.purity() == 1.0);

    const QuantumState mixed{diag({0.25, 0.25, 0.25, 0.25}), {2, 2}};
    const auto embedded = with_phonon_vacuum(mixed, 3);
    CHECK(embedded.dim() == 12);
    CHECK(max_abs_diff(partial_trace(embedded, {0, 1}).matrix(), mixed.matrix()) < 1e-15);
    CHECK(partial_trace(embedded, {2}).matrix()(0, 0).real() == Approx(1.0));
}

TEST_CASE("rescaled scales every energy") {
    const EngineParams p;
    const auto q = p.rescaled(2.0);
    CHECK(q.omega == 2.0);
    CHECK(q.B_h == 20.0);
    CHECK(ddi_coefficients(q).omega12 == Approx(2.0 * ddi_coefficients(p).omega12));
    CHECK(beta_from_nbar(q.nbar, q.B_h).value() == Approx(0.5 * beta_from_nbar(p.nbar, p.B_h).value()));
}
