#include "iqcloc/admm.hpp"
#include "iqcloc/analysis.hpp"
#include "iqcloc/grouping.hpp"
#include "iqcloc/localization.hpp"
#include "iqcloc/synthesis.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace iqcloc;

namespace {

Mat random_matrix(std::mt19937& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = nd(rng);
    return m;
}

// Diagonally dominant, so Hurwitz for the sizes used here.
ClosedLoop random_stable(std::mt19937& rng, int n) {
    Mat a = 0.3 * random_matrix(rng, n, n);
    a.diagonal().array() -= 1.0 + 0.3 * n;
    return {a, random_matrix(rng, n, 1), random_matrix(rng, 1, n), Mat::Zero(1, 1)};
}

StateSpace half_gain() {
    return StateSpace::open_loop(Mat::Constant(1, 1, -2.0), Mat::Ones(1, 1), Mat::Ones(1, 1), Mat::Zero(1, 1));
}

// w -> H1 -> ... -> HN -> z
Interconnection series_chain(int n) {
    Interconnection m;
    m.M11 = Mat::Zero(n, n);
    for (int i = 1; i < n; ++i) m.M11(i, i - 1) = 1.0;
    m.M12 = Mat::Zero(n, 1);
    m.M12(0, 0) = 1.0;
    m.M21 = Mat::Zero(1, n);
    m.M21(0, n - 1) = 1.0;
    m.M22 = Mat::Zero(1, 1);
    m.nv_parts.assign(n, 1);
    m.ny_parts.assign(n, 1);
    return m;
}

// Identity routing of w and z with weak random feedback between subsystems.
Interconnection coupled(std::mt19937& rng, int n) {
    Interconnection m;
    m.M11 = 0.3 * random_matrix(rng, n, n);
    m.M11.diagonal().setZero();
    m.M12 = Mat::Identity(n, n);
    m.M21 = Mat::Identity(n, n);
    m.M22 = Mat::Zero(n, n);
    m.nv_parts.assign(n, 1);
    m.ny_parts.assign(n, 1);
    return m;
}

}  // namespace

static void BM_IqcAnalysis(benchmark::State& state) {
    std::mt19937 rng(1);
    const ClosedLoop sys = random_stable(rng, static_cast<int>(state.range(0)));
    const Multiplier x = eval(l2gain_quad(1, 1), 10.0);
    for (auto _ : state) benchmark::DoNotOptimize(iqc_analysis(sys, x));
}
BENCHMARK(BM_IqcAnalysis)->DenseRange(1, 6)->Unit(benchmark::kMillisecond);

static void BM_BisectGamma(benchmark::State& state) {
    std::mt19937 rng(2);
    const ClosedLoop sys = random_stable(rng, static_cast<int>(state.range(0)));
    const double hi = 10.0 * freq_gain_oracle(sys) + 1.0;
    for (auto _ : state) benchmark::DoNotOptimize(bisect_gamma(sys, l2gain_quad(1, 1), 0.0, hi));
}
BENCHMARK(BM_BisectGamma)->DenseRange(1, 4)->Unit(benchmark::kMillisecond);

static void BM_Synthesize(benchmark::State& state) {
    StateSpace p;
    const int n = static_cast<int>(state.range(0));
    std::mt19937 rng(3);
    p.A = random_stable(rng, n).A;
    p.B1 = random_matrix(rng, n, 1);
    p.B2 = random_matrix(rng, n, 1);
    p.C1 = random_matrix(rng, 1, n);
    p.D11 = Mat::Zero(1, 1);
    p.D12 = Mat::Ones(1, 1);
    p.C2 = random_matrix(rng, 1, n);
    p.D21 = Mat::Ones(1, 1);
    const double hi = default_gamma_interval(p).second;
    for (auto _ : state) benchmark::DoNotOptimize(synthesize(p, l2gain_quad(1, 1), 0.0, hi));
}
BENCHMARK(BM_Synthesize)->DenseRange(1, 3)->Unit(benchmark::kMillisecond);

static void BM_GacQuadratic(benchmark::State& state) {
    std::mt19937 rng(4);
    const int n = static_cast<int>(state.range(0));
    const Interconnection m = coupled(rng, n);
    const LocalProblemSet qs(n, l2gain_quad(1, 1));
    const QuadMultiplier w = l2gain_quad(n, n);
    for (auto _ : state) benchmark::DoNotOptimize(gac_quadratic(m, qs, w));
}
BENCHMARK(BM_GacQuadratic)->RangeMultiplier(2)->Range(2, 32);

static void BM_ClosestLocalization(benchmark::State& state) {
    std::mt19937 rng(5);
    const int n = static_cast<int>(state.range(0));
    const Interconnection m = coupled(rng, n);
    LocalizationOptions opts;
    opts.mode = state.range(1) != 0 ? StructureMode::FullBlock : StructureMode::BlockDiagonal;
    for (auto _ : state) benchmark::DoNotOptimize(closest_localization(m, l2gain_quad(n, n), opts));
}
BENCHMARK(BM_ClosestLocalization)
    ->ArgsProduct({{2, 3, 4, 6}, {0, 1}})
    ->ArgNames({"N", "fullblock"})
    ->Unit(benchmark::kMillisecond);

static void BM_AdmmChain(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const Interconnection m = series_chain(n);
    const std::vector<StateSpace> plants(n, half_gain());
    AdmmOptions opts;
    opts.parallel = state.range(1) != 0;
    for (auto _ : state) benchmark::DoNotOptimize(admm_solve(m, l2gain_quad(1, 1), plants, opts));
}
BENCHMARK(BM_AdmmChain)
    ->ArgsProduct({{2, 3, 4}, {0, 1}})
    ->ArgNames({"N", "parallel"})
    ->Unit(benchmark::kMillisecond);

static void BM_GroupLocalize(benchmark::State& state) {
    std::mt19937 rng(6);
    const int n = static_cast<int>(state.range(0));
    const Interconnection m = coupled(rng, n);
    for (auto _ : state) benchmark::DoNotOptimize(group_localize(m, l2gain_quad(n, n), (n + 1) / 2, 2));
}
BENCHMARK(BM_GroupLocalize)->DenseRange(3, 5)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
