#include "iqcloc/analysis.hpp"
#include "iqcloc/error.hpp"
#include "iqcloc/synthesis.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace iqcloc;
using iqcloc::testing::random_signal;

namespace {

Mat s(double v) { return Mat::Constant(1, 1, v); }

bool analysis_feasible(const ClosedLoop& sys, const Multiplier& x) {
    try {
        iqc_analysis(sys, x);
        return true;
    } catch (const Error& e) {
        REQUIRE(e.kind() == ErrorKind::Infeasible);
        return false;
    }
}

}  // namespace

TEST_CASE("L2 gain 0.5 system: feasible at 0.6, infeasible at 0.4") {
    const ClosedLoop sys{s(-2), s(1), s(1), s(0)};
    const StorageCertificate cert = iqc_analysis(sys, eval(l2gain_quad(1, 1), 0.6));
    CHECK(cert.P(0, 0) > 0.0);
    CHECK(cert.feas_residual <= 1e-7);
    CHECK_FALSE(analysis_feasible(sys, eval(l2gain_quad(1, 1), 0.4)));
}

TEST_CASE("passive first-order system") {
    const ClosedLoop sys{s(-1), s(1), s(1), s(0)};
    const Multiplier x = passivity_multiplier(1, 0.0);
    const StorageCertificate cert = iqc_analysis(sys, x);
    CHECK(cert.feas_residual <= 1e-7);
    // The supply [v; y]^T X [v; y] = 2 v y has a unique storage P = 1.
    CHECK(cert.P(0, 0) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(lambda_max(dissipation_lmi(sys, x, s(1.0))) <= 1e-12);
    // V = x^2 / 2 certifies v y, i.e. the supply 0.5 X.
    CHECK(lambda_max(dissipation_lmi(sys, x.scaled(0.5), s(0.5))) <= 1e-12);
}

TEST_CASE("dissipation LMI expands to the storage derivative minus the supply") {
    std::mt19937 rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = iqcloc::testing::uniform_int(rng, 1, 3);
        const ClosedLoop sys{iqcloc::testing::random_matrix(rng, n, n), iqcloc::testing::random_matrix(rng, n, 2),
                             iqcloc::testing::random_matrix(rng, 1, n), iqcloc::testing::random_matrix(rng, 1, 2)};
        const Multiplier x(iqcloc::testing::random_symmetric(rng, 3), 2);
        const Mat p = iqcloc::testing::random_symmetric(rng, n);
        const Vec st = iqcloc::testing::random_matrix(rng, n, 1);
        const Vec v = iqcloc::testing::random_matrix(rng, 2, 1);
        const Vec xdot = sys.A * st + sys.B * v;
        Vec port(3);
        port << v, sys.C * st + sys.D * v;
        Vec xv(n + 2);
        xv << st, v;
        const double expected = 2.0 * st.dot(p * xdot) - port.dot(x.matrix() * port);
        CHECK(xv.dot(dissipation_lmi(sys, x, p) * xv) == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("reachability certificate") {
    const ClosedLoop sys{s(-1), s(1), s(1), s(0)};
    const ReachabilityCertificate rc = reachability_certificate(sys, 1.0);
    CHECK(rc.level == 2.0);
    const double p = rc.storage.P(0, 0);
    CHECK(p > 0.0);
    Mat lmi(2, 2);
    lmi << -2 * p, p, p, -1;
    CHECK(is_nsd(lmi, 1e-7));
    // P = 0.5 is admissible.
    Mat half(2, 2);
    half << -1, 0.5, 0.5, -1;
    CHECK(is_nsd(half, 0.0));

    try {
        reachability_certificate(ClosedLoop{s(1), s(0), s(1), s(0)}, 1.0);
        FAIL("expected Infeasible");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Infeasible);
    }
    CHECK_THROWS_AS(reachability_certificate(sys, 0.0), Error);
    CHECK_THROWS_AS(reachability_certificate(sys, -1.0), Error);
}

TEST_CASE("output-bounded storage") {
    const ClosedLoop sys{s(-2), s(1), s(1), s(0)};
    const Multiplier x = eval(l2gain_quad(1, 1), 0.6);
    const StorageCertificate cert = iqc_analysis_output_bound(sys, x, 2.0);
    CHECK(4.0 * cert.P(0, 0) >= 1.0 - 1e-7);
    CHECK_THROWS_AS(iqc_analysis_output_bound(sys, x, 0.0), Error);
}

TEST_CASE("dissipation residual examples") {
    const ClosedLoop sys{s(-1), s(1), s(1), s(0)};
    const Multiplier x = passivity_multiplier(1, 0.0);
    const StorageCertificate good{s(1.0), x, 0.0};
    Signal zero;
    zero.dt = 0.01;
    zero.samples.assign(200, Vec::Zero(1));
    CHECK(dissipation_residual(sys, good, zero) == 0.0);

    std::mt19937 rng(9);
    const Signal w = random_signal(rng, 1, 0.01, 1000);
    CHECK(dissipation_residual(sys, good, w) <= 1e-6);
    const StorageCertificate bad{s(-1.0), x, 0.0};
    CHECK(dissipation_residual(sys, bad, w) > 0.0);
}

TEST_CASE("analysis bisection matches the frequency oracle; certificates replay") {
    std::mt19937 rng(21);
    for (int trial = 0; trial < 12; ++trial) {
        const int n = iqcloc::testing::uniform_int(rng, 1, 3);
        const ClosedLoop sys{iqcloc::testing::random_hurwitz(rng, n, 0.3), iqcloc::testing::random_matrix(rng, n, 1),
                             iqcloc::testing::random_matrix(rng, 1, n), 0.3 * iqcloc::testing::random_matrix(rng, 1, 1)};
        // Dense grid around the default one for a tight oracle.
        std::vector<double> grid = default_frequency_grid();
        for (int k = 0; k <= 20000; ++k) grid.push_back(std::pow(10.0, -3.0 + 6.0 * k / 20000.0));
        const double oracle = freq_gain_oracle(sys, grid);
        SynthesisOptions opts;
        opts.bisect_tol = 1e-5;
        const double g = bisect_gamma(sys, l2gain_quad(1, 1), 0.0, 10.0 * oracle + 1.0, opts).gamma;
        CHECK(std::abs(g - oracle) <= 1e-3 * oracle);

        const StorageCertificate cert = iqc_analysis(sys, eval(l2gain_quad(1, 1), 1.05 * g));
        for (int k = 0; k < 3; ++k) CHECK(dissipation_residual(sys, cert, random_signal(rng, 1, 0.01, 500)) <= 1e-5);
        CHECK(analysis_feasible(sys, eval(l2gain_quad(1, 1), 1.05 * g).scaled(0.1)));
        CHECK(analysis_feasible(sys, eval(l2gain_quad(1, 1), 1.05 * g).scaled(10.0)));
    }
}

TEST_CASE("partition mismatch") {
    const ClosedLoop sys{s(-1), s(1), s(1), s(0)};
    CHECK_THROWS_AS(iqc_analysis(sys, eval(l2gain_quad(2, 1), 1.0)), Error);
}
