#include "iqcloc/analysis.hpp"
#include "iqcloc/error.hpp"
#include "iqcloc/multiplier.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace iqcloc;

namespace {

Mat m2(double a, double b, double c, double d) {
    Mat m(2, 2);
    m << a, b, c, d;
    return m;
}

}  // namespace

TEST_CASE("eval of the L2 multiplier at gamma = 3") {
    QuadMultiplier q{m2(1, 0, 0, 0), Mat::Zero(2, 2), m2(0, 0, 0, -1), 1};
    CHECK(max_abs(eval(q, 3.0).matrix() - m2(9, 0, 0, -1)) < 1e-15);
    CHECK(max_abs(eval(q, 0.0).matrix() - q.X3) == 0.0);
}

TEST_CASE("eval expands the cross term") {
    QuadMultiplier q{Mat::Zero(2, 2), m2(0, 0.5, 0.5, 0), Mat::Zero(2, 2), 1};
    CHECK(max_abs(eval(q, 1.0).matrix() - m2(0, 1, 1, 0)) < 1e-15);
}

TEST_CASE("passivity multiplier") {
    CHECK(max_abs(passivity_multiplier(1, 0.0).matrix() - m2(0, 1, 1, 0)) == 0.0);
    const Multiplier p = passivity_multiplier(2, 0.1);
    CHECK(max_abs(p.x11()) == 0.0);
    CHECK(max_abs(p.x12() - Mat::Identity(2, 2)) == 0.0);
    CHECK(max_abs(p.x22() + 0.1 * Mat::Identity(2, 2)) < 1e-15);
    CHECK_THROWS_AS(passivity_multiplier(1, -0.1), Error);
    CHECK_THROWS_AS(passivity_multiplier(0, 0.0), Error);
}

TEST_CASE("l2gain_quad") {
    CHECK(max_abs(eval(l2gain_quad(1, 1), 0.5).matrix() - m2(0.25, 0, 0, -1)) < 1e-15);
    CHECK(max_abs(eval(l2gain_quad(1, 1), 0.0).matrix() - m2(0, 0, 0, -1)) == 0.0);
    Mat expect = Mat::Zero(3, 3);
    expect.diagonal() << 4, 4, -1;
    CHECK(max_abs(eval(l2gain_quad(2, 1), 2.0).matrix() - expect) < 1e-15);
}

TEST_CASE("asymmetric multiplier is rejected") {
    CHECK_THROWS_AS(Multiplier(m2(0, 1, 0, 0), 1), Error);
    CHECK_THROWS_AS(Multiplier(Mat::Zero(2, 3), 1), Error);
}

TEST_CASE("stability certificate examples") {
    const StabilityCertificate c = check_stability_multiplier(Multiplier(m2(4, 0, 0, -1), 1));
    CHECK(c.c >= 4.0);
    CHECK(c.c <= 4.0 + 1e-4);
    try {
        check_stability_multiplier(Multiplier(Mat::Identity(2, 2), 1));
        FAIL("expected NotStabilityMultiplier");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotStabilityMultiplier);
    }
    try {
        check_stability_multiplier(Multiplier(m2(0, 1, 1, 0), 1));
        FAIL("expected NotStabilityMultiplier");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotStabilityMultiplier);
    }
    CHECK_THROWS_AS(check_stability_multiplier(Multiplier(m2(1, 0, 0, 0), 1)), Error);
}

TEST_CASE("stability bound within 1% for diag(c, -1)") {
    for (double cval : {1.0, 4.0, 100.0}) {
        const StabilityCertificate cert = check_stability_multiplier(Multiplier(m2(cval, 0, 0, -1), 1));
        CHECK(cert.c <= cval + 0.01);
        CHECK(cert.c >= cval);
    }
}

TEST_CASE("stability bound with a cross term matches the Young inequality") {
    // X = [1 0.5; 0.5 -1]: |z|^2 <= |w|^2 + |w||z| gives |z| <= phi |w| with
    // phi the golden ratio, so the energy bound c must be at least phi^2.
    const StabilityCertificate cert = check_stability_multiplier(Multiplier(m2(1, 0.5, 0.5, -1), 1));
    const double phi = 0.5 * (1.0 + std::sqrt(5.0));
    CHECK(cert.c >= phi * phi - 1e-9);
    CHECK(cert.pi22 * cert.epsilon - cert.pi12 * cert.pi12 > 0.0);
}

TEST_CASE("l2gain_quad is monotone on gamma >= 0; a decreasing family is not") {
    CHECK(is_monotone_on(l2gain_quad(2, 3), 0.0, 10.0));
    QuadMultiplier dec = l2gain_quad(1, 1);
    dec.X1 = -dec.X1;
    CHECK_FALSE(is_monotone_on(dec, 0.0, 10.0));
}

TEST_CASE("eval differences are NSD along increasing gamma grids") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const int nin = iqcloc::testing::uniform_int(rng, 1, 3), nout = iqcloc::testing::uniform_int(rng, 1, 3);
        const QuadMultiplier q = l2gain_quad(nin, nout);
        const double g1 = iqcloc::testing::uniform(rng, 0.0, 5.0);
        const double g2 = g1 + iqcloc::testing::uniform(rng, 0.0, 5.0);
        CHECK(is_nsd(eval(q, g1).matrix() - eval(q, g2).matrix(), 1e-12));
    }
}

TEST_CASE("analysis feasibility is invariant under scaling of X") {
    std::mt19937 rng(3);
    for (int trial = 0; trial < 8; ++trial) {
        const int n = iqcloc::testing::uniform_int(rng, 1, 3);
        ClosedLoop sys{iqcloc::testing::random_hurwitz(rng, n, 0.3), iqcloc::testing::random_matrix(rng, n, 1),
                       iqcloc::testing::random_matrix(rng, 1, n), Mat::Zero(1, 1)};
        const double gain = freq_gain_oracle(sys);
        for (double g : {0.8 * gain, 1.2 * gain}) {
            const Multiplier x = eval(l2gain_quad(1, 1), g);
            auto feasible = [&](const Multiplier& m) {
                try {
                    iqc_analysis(sys, m);
                    return true;
                } catch (const Error& e) {
                    REQUIRE(e.kind() == ErrorKind::Infeasible);
                    return false;
                }
            };
            const bool base = feasible(x);
            CHECK(base == (g > gain));
            CHECK(feasible(x.scaled(7.0)) == base);
        }
    }
}
