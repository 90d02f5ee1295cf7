#include "iqcloc/error.hpp"
#include "iqcloc/synthesis.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace iqcloc;
using iqcloc::testing::kind_of;
using iqcloc::testing::random_plant;

namespace {

Mat s(double v) { return Mat::Constant(1, 1, v); }

// x' = -x + v + u, y = x + u, y_m = x
StateSpace scalar_plant() {
    StateSpace p;
    p.A = s(-1);
    p.B1 = s(1);
    p.B2 = s(1);
    p.C1 = s(1);
    p.D11 = s(0);
    p.D12 = s(1);
    p.C2 = s(1);
    p.D21 = s(0);
    return p;
}

// Same dynamics with the control effort added to the output: y = [x; u].
// Static feedback u = -k x gives gain sqrt(1 + k^2) / (1 + k), so the optimum
// is strictly positive.
StateSpace penalized_plant() {
    StateSpace p = scalar_plant();
    p.C1 = Mat(2, 1);
    p.C1 << 1, 0;
    p.D11 = Mat::Zero(2, 1);
    p.D12 = Mat(2, 1);
    p.D12 << 0, 1;
    return p;
}

}  // namespace

TEST_CASE("scalar plant: feasible at gamma = 2") {
    const EliminationCertificate c = synthesis_feasible(scalar_plant(), eval(l2gain_quad(1, 1), 2.0));
    CHECK(is_psd(block_matrix({{c.Q1, s(1)}, {s(1), c.Q2}}), 1e-7));
}

TEST_CASE("scalar plant: u = -y_m cancels the output, so tiny levels stay feasible") {
    CHECK_NOTHROW(synthesis_feasible(scalar_plant(), eval(l2gain_quad(1, 1), 1e-2)));
    const ClosedLoop cl = close_loop(scalar_plant(), Controller{Mat(0, 0), Mat(0, 1), Mat(1, 0), s(-1)});
    CHECK(freq_gain_oracle(cl) == 0.0);
}

TEST_CASE("penalized plant: infeasible at gamma = 1e-6") {
    CHECK(kind_of([] { synthesis_feasible(penalized_plant(), eval(l2gain_quad(1, 2), 1e-6)); }) ==
          ErrorKind::Infeasible);
    CHECK(kind_of([] { synthesis_feasible(penalized_plant(), eval(l2gain_quad(1, 2), 0.3)); }) ==
          ErrorKind::Infeasible);
    CHECK_NOTHROW(synthesis_feasible(penalized_plant(), eval(l2gain_quad(1, 2), 0.75)));
}

TEST_CASE("without control channels the conditions reduce to open-loop analysis") {
    const StateSpace p = StateSpace::open_loop(s(-2), s(1), s(1), s(0));
    CHECK_NOTHROW(synthesis_feasible(p, eval(l2gain_quad(1, 1), 0.6)));
    CHECK(kind_of([&] { synthesis_feasible(p, eval(l2gain_quad(1, 1), 0.4)); }) == ErrorKind::Infeasible);
}

TEST_CASE("bisection without control authority recovers the open-loop gain") {
    StateSpace p = StateSpace::open_loop(s(-2), s(1), s(1), s(0));
    p.C2 = s(1);
    p.D21 = s(0);
    p.B2 = Mat::Zero(1, 0);
    p.D12 = Mat::Zero(1, 0);
    const BisectionResult r = bisect_gamma(p, l2gain_quad(1, 1), 0.0, 10.0);
    CHECK(std::abs(r.gamma - 0.5) <= 1e-3);
}

TEST_CASE("bisection edge cases") {
    const StateSpace p = StateSpace::open_loop(s(-2), s(1), s(1), s(0));
    CHECK(bisect_gamma(p, l2gain_quad(1, 1), 3.0, 3.0).gamma == 3.0);
    CHECK(kind_of([&] { bisect_gamma(p, l2gain_quad(1, 1), 0.1, 0.3); }) == ErrorKind::InfeasibleAtHi);
    QuadMultiplier dec = l2gain_quad(1, 1);
    dec.X1 = -dec.X1;
    CHECK(kind_of([&] { bisect_gamma(p, dec, 0.0, 1.0); }) == ErrorKind::NonMonotone);
    CHECK(bisect(0.0, 1.0, 1e-6, [](double g) { return g >= 0.3; }).gamma == doctest::Approx(0.3).epsilon(1e-5));
}

TEST_CASE("reconstruct_P examples") {
    Mat expect(2, 2);
    expect << 1, 1, 1, 2;
    CHECK(max_abs(reconstruct_P(s(2), s(1), s(1), s(-1)) - expect) < 1e-12);
    // The default split may flip the sign of the controller coordinate.
    const Mat p = reconstruct_P(s(2), s(1));
    CHECK(max_abs(p.cwiseAbs() - expect) < 1e-12);

    CHECK(kind_of([] { reconstruct_P(Mat::Identity(2, 2), Mat::Identity(2, 2)); }) == ErrorKind::SingularCoupling);

    const double r = std::sqrt(2.0);
    const Mat p3 = reconstruct_P(s(3), s(1), s(r), s(-r));
    Mat expect3(2, 2);
    expect3 << 1, r, r, 3;
    CHECK(max_abs(p3 - expect3) < 1e-12);
    CHECK(lambda_min(p3) > 0.0);
    const Mat p3lu = reconstruct_P(s(3), s(1));
    CHECK(lambda_min(p3lu) > 0.0);
}

TEST_CASE("reconstruct_P solves its defining system on random coupled pairs") {
    std::mt19937 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = iqcloc::testing::uniform_int(rng, 1, 4);
        // [Q1 I; I Q2] > 0 strictly: Q2 > Q1^{-1}.
        const Mat q1 = iqcloc::testing::random_psd(rng, n) + 0.1 * Mat::Identity(n, n);
        const Mat q2 = q1.inverse() + iqcloc::testing::random_psd(rng, n) + 0.1 * Mat::Identity(n, n);
        const Mat p = reconstruct_P(q1, q2);
        CHECK(max_abs(p - p.transpose()) <= 1e-8);
        CHECK(max_abs(p.topLeftCorner(n, n) - q2) <= 1e-8 * std::max(1.0, max_abs(q2)));
        const Mat pinv = p.inverse();
        CHECK(max_abs(pinv.topLeftCorner(n, n) - q1) <= 1e-6 * std::max(1.0, max_abs(q1)));
        CHECK(lambda_min(p) > 0.0);
    }
}

TEST_CASE("singular multipliers are perturbed on the output block") {
    Mat x = Mat::Zero(2, 2);
    x(0, 0) = 1.0;
    const Multiplier reg = regularize_multiplier(Multiplier(x, 1));
    CHECK(reg.x22()(0, 0) < 0.0);
    CHECK(reg.x11()(0, 0) == 1.0);
    CHECK(kind_of([] { regularize_multiplier(Multiplier(Mat::Zero(2, 2), 1)); }) == ErrorKind::SingularMultiplier);
}

TEST_CASE("end-to-end pipeline on the penalized plant") {
    const StateSpace p = penalized_plant();
    SynthesisOptions opts;
    opts.recover_margin = 0.01;
    const SynthesisResult res = synthesize(p, l2gain_quad(1, 2), 0.0, 10.0, opts);
    // Static feedback already achieves 1/sqrt(2).
    CHECK(res.gamma_star <= std::sqrt(0.5) + 1e-3);
    CHECK(res.gamma_star > 0.3);
    const ClosedLoop cl = close_loop(p, res.controller);
    CHECK(is_hurwitz(cl.A));
    CHECK(freq_gain_oracle(cl) <= res.gamma_star * 1.06);
    CHECK(res.cert.feas_residual <= 1e-6);
    CHECK_NOTHROW(iqc_analysis(cl, eval(l2gain_quad(1, 2), res.gamma_star + 1e-2)));
}

TEST_CASE("zero controller is feasible when the plant already satisfies the IQC") {
    StateSpace p = scalar_plant();
    p.A = s(-2);
    p.D12 = s(0);
    const Multiplier x = eval(l2gain_quad(1, 1), 1.0);
    // Storage for the open loop padded with an uncoupled controller state.
    const StorageCertificate open = iqc_analysis(open_loop_channel(p), x);
    Mat pp = Mat::Identity(2, 2);
    pp(0, 0) = open.P(0, 0);
    const Controller k = recover_controller(p, x, pp);
    CHECK(lambda_max(dissipation_lmi(close_loop(p, k), x, pp)) <= 1e-6);
    CHECK(lambda_max(dissipation_lmi(close_loop(p, Controller::zero(1, 1, 1)), x, pp)) <= 1e-6);
}

TEST_CASE("recovery fails below the achievable level") {
    const StateSpace p = scalar_plant();
    CHECK(kind_of([&] { recover_controller(p, eval(l2gain_quad(1, 1), 1e-3), Mat::Identity(2, 2)); }) ==
          ErrorKind::Infeasible);
}

TEST_CASE("random plants: elimination and recovered controllers agree") {
    std::mt19937 rng(41);
    int done = 0;
    for (int trial = 0; trial < 40 && done < 10; ++trial) {
        const int n = iqcloc::testing::uniform_int(rng, 1, 3);
        const StateSpace p = random_plant(rng, n);
        double gstar = 0.0;
        try {
            gstar = bisect_gamma(p, l2gain_quad(1, 1), 0.0, 100.0).gamma;
        } catch (const Error& e) {
            continue;
        }
        // Very large optimal levels come from nearly uncontrollable plants.
        if (gstar > 20.0) continue;
        ++done;
        const double g = gstar * 1.05;
        const Multiplier x = eval(l2gain_quad(1, 1), g);
        const EliminationCertificate c = synthesis_feasible(p, x);
        const Mat pm = reconstruct_P(c.Q1, c.Q2);
        const Controller k = recover_controller(p, x, pm);
        const ClosedLoop cl = close_loop(p, k);
        CHECK(lambda_max(dissipation_lmi(cl, x, pm)) <= 1e-7 * std::max(1.0, max_abs(pm)));
        CHECK(is_hurwitz(cl.A));
        CHECK(freq_gain_oracle(cl) <= gstar * 1.06);
    }
    CHECK(done >= 5);
}
