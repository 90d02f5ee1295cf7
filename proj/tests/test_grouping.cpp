#include "iqcloc/error.hpp"
#include "iqcloc/grouping.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace iqcloc;
using iqcloc::testing::coupled_triple;
using iqcloc::testing::kind_of;
using iqcloc::testing::enumerate_partitions;
using iqcloc::testing::min_distance_oracle;

namespace {

Interconnection coupled_pair() {
    Interconnection m;
    m.M11 = Mat(2, 2);
    m.M11 << 0, 0.8, 0.4, 0;
    m.M12 = Mat::Identity(2, 2);
    m.M21 = Mat::Identity(2, 2);
    m.M22 = Mat::Zero(2, 2);
    m.nv_parts = {1, 1};
    m.ny_parts = {1, 1};
    return m;
}

Vec sorted_desc(Vec v) {
    std::sort(v.data(), v.data() + v.size(), std::greater<>());
    return v;
}

}  // namespace

TEST_CASE("membership_from_P: two groups and their singular values") {
    Mat p(3, 3);
    p << 1, 1, 0, 1, 1, 0, 0, 0, 1;
    const Groups g = membership_from_P(p);
    REQUIRE(g.size() == 2);
    CHECK(g[0] == std::vector<int>{0, 1});
    CHECK(g[1] == std::vector<int>{2});
    const Vec sv = singular_values(p);
    CHECK(sv(0) == doctest::Approx(2.0));
    CHECK(sv(1) == doctest::Approx(1.0));
    CHECK(std::abs(sv(2)) <= 1e-12);
}

TEST_CASE("membership_from_P: identity gives singletons") {
    const Groups g = membership_from_P(Mat::Identity(3, 3));
    CHECK(g == Groups{{0}, {1}, {2}});
}

TEST_CASE("membership_from_P: rejections") {
    Mat p(3, 3);
    p << 1, 1, 0, 1, 1, 1, 0, 1, 1;
    CHECK(kind_of([&] { membership_from_P(p); }) == ErrorKind::NotEquivalence);
    Mat half = Mat::Identity(2, 2);
    half(0, 1) = half(1, 0) = 0.5;
    CHECK(kind_of([&] { membership_from_P(half); }) == ErrorKind::InvalidArgument);
    Mat asym = Mat::Identity(2, 2);
    asym(0, 1) = 1.0;
    CHECK(kind_of([&] { membership_from_P(asym); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([&] { membership_from_P(Mat::Zero(2, 2)); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("membership_matrix: random assignments factor with singular values equal to group sizes") {
    std::mt19937 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = iqcloc::testing::uniform_int(rng, 2, 8);
        const int ng = iqcloc::testing::uniform_int(rng, 1, n);
        // Each group gets one member, the rest are spread at random.
        std::vector<int> label(n);
        std::iota(label.begin(), label.end(), 0);
        std::shuffle(label.begin(), label.end(), rng);
        for (int i = 0; i < n; ++i)
            label[i] = label[i] < ng ? label[i] : iqcloc::testing::uniform_int(rng, 0, ng - 1);
        Groups groups(ng);
        for (int i = 0; i < n; ++i) groups[label[i]].push_back(i);

        const Mat rho = assignment_matrix(groups, n);
        CHECK(rho.rowwise().sum().isApprox(Vec::Ones(n)));
        const Mat p = membership_matrix(groups, n);
        CHECK(p.isApprox(rho * rho.transpose()));

        Vec sizes(ng);
        for (int j = 0; j < ng; ++j) sizes(j) = static_cast<double>(groups[j].size());
        const Vec sv = singular_values(p);
        const Vec expect = sorted_desc(sizes);
        CHECK((sv.head(ng) - expect).cwiseAbs().maxCoeff() <= 1e-12 * n);
        int rank = 0;
        for (Eigen::Index k = 0; k < sv.size(); ++k) rank += sv(k) > 1e-9 ? 1 : 0;
        CHECK(rank == ng);
        CHECK(membership_from_P(p).size() == static_cast<std::size_t>(ng));
    }
}

TEST_CASE("assignment_matrix: rejects overlapping or incomplete groups") {
    CHECK(kind_of([] { assignment_matrix({{0, 1}, {1}}, 2); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([] { assignment_matrix({{0}}, 2); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([] { assignment_matrix({{0, 2}}, 2); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("hadamard_blocks: examples") {
    std::mt19937 rng(4);
    const Mat x = iqcloc::testing::random_symmetric(rng, 3);
    const std::vector<int> sizes{1, 2};
    const Mat d = hadamard_blocks(Mat::Identity(2, 2), x, sizes);
    CHECK(d.topLeftCorner(1, 1) == x.topLeftCorner(1, 1));
    CHECK(d.bottomRightCorner(2, 2) == x.bottomRightCorner(2, 2));
    CHECK(d.topRightCorner(1, 2).norm() == 0.0);
    CHECK(hadamard_blocks(Mat::Ones(2, 2), x, sizes) == x);

    Mat s(2, 2);
    s << 1, 5, 5, 2;
    CHECK(hadamard_blocks(Mat::Ones(2, 2), s, {1, 1})(0, 1) == 5.0);
    Mat half = Mat::Ones(2, 2);
    half(0, 1) = half(1, 0) = 0.5;
    const Mat h = hadamard_blocks(half, x, sizes);
    CHECK(h.topRightCorner(1, 2).isApprox(0.5 * x.topRightCorner(1, 2)));
    CHECK(h.isApprox(h.transpose()));

    CHECK(kind_of([&] { hadamard_blocks(Mat::Ones(3, 3), x, sizes); }) == ErrorKind::DimensionMismatch);
    CHECK(kind_of([&] { hadamard_blocks(Mat::Ones(2, 2), x, {1, 1}); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("round_membership: threshold, closure, capacity and group count") {
    Mat chain = Mat::Identity(3, 3);
    chain(0, 1) = chain(1, 0) = 0.9;
    chain(1, 2) = chain(2, 1) = 0.6;
    // Closure joins all three; capacity 2 detaches the weakest member.
    CHECK(round_membership(chain, 2, 2) == Groups{{0, 1}, {2}});

    Mat weak = Mat::Identity(4, 4);
    weak(2, 3) = weak(3, 2) = 0.3;
    weak(0, 1) = weak(1, 0) = 0.1;
    // Four singletons, merged by attachment to reach two groups.
    CHECK(round_membership(weak, 2, 2) == Groups{{0, 1}, {2, 3}});

    // All joined, then split to reach the requested count.
    CHECK(round_membership(Mat::Ones(3, 3), 3, 2).size() == 3);
    CHECK(kind_of([] { round_membership(Mat::Identity(3, 3), 1, 2); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("partition_localization: matches the independent min-distance oracle") {
    std::mt19937 rng(6);
    const Interconnection m = coupled_triple(rng, 0, 1, 2.0);
    const QuadMultiplier w = l2gain_quad(3, 3);
    for (const Groups& g : enumerate_partitions(3, 2, 2)) {
        const Localization loc = partition_localization(m, w, g);
        const double oracle = min_distance_oracle(m, w, membership_matrix(g, 3));
        CHECK(loc.distance == doctest::Approx(oracle).epsilon(1e-5));
        // Blocks outside the partition stay zero.
        const Mat off = hadamard_blocks(Mat::Ones(3, 3) - membership_matrix(g, 3), loc.joint.X1, {2, 2, 2});
        CHECK(off.norm() == 0.0);
    }
}

TEST_CASE("group_localize: unit capacity forces singletons and the block-diagonal localization") {
    const Interconnection m = coupled_pair();
    const QuadMultiplier w = l2gain_quad(2, 2);
    const GroupLocalization r = group_localize(m, w, 2, 1);
    CHECK(r.groups == Groups{{0}, {1}});
    CHECK(r.P.isApprox(Mat::Identity(2, 2)));
    // Fixed point from the start.
    CHECK(r.iterations == 1);
    CHECK(r.converged);
    LocalizationOptions bd;
    bd.objective = ClosestObjective::Distance;
    CHECK(r.distance == doctest::Approx(closest_localization(m, w, bd).distance).epsilon(1e-6));
    CHECK(r.distance == doctest::Approx(min_distance_oracle(m, w, Mat::Identity(2, 2))).epsilon(1e-5));
}

TEST_CASE("group_localize: strongly coupled pair is grouped and matches brute force") {
    std::mt19937 rng(11);
    const QuadMultiplier w = l2gain_quad(3, 3);
    const int pairs[3][2] = {{0, 1}, {1, 2}, {0, 2}};
    for (const auto& pr : pairs) {
        const Interconnection m = coupled_triple(rng, pr[0], pr[1], 2.0);
        const GroupLocalization r = group_localize(m, w, 2, 2);
        REQUIRE(r.groups.size() == 2);
        bool together = false;
        for (const auto& g : r.groups)
            together |= std::find(g.begin(), g.end(), pr[0]) != g.end() && std::find(g.begin(), g.end(), pr[1]) != g.end();
        CHECK(together);

        double best = std::numeric_limits<double>::infinity();
        for (const Groups& g : enumerate_partitions(3, 2, 2))
            best = std::min(best, min_distance_oracle(m, w, membership_matrix(g, 3)));
        CHECK(r.distance <= 1.05 * best);

        for (std::size_t k = 0; k < r.distance_before.size(); ++k)
            CHECK(r.distance_after[k] <= r.distance_before[k] + 1e-7);

        const Mat g = gac_quadratic(m, local_lift(m, r.multipliers), w);
        CHECK(lambda_max(g) <= 1e-7 * std::max(1.0, max_abs(g)));
        CHECK(hadamard_blocks(r.P, r.multipliers, m).X1.isApprox(r.multipliers.X1));
        for (const auto& grp : r.groups) CHECK(grp.size() <= 2);
    }
}

TEST_CASE("group_localize: preconditions and infeasibility") {
    std::mt19937 rng(1);
    const Interconnection m = coupled_triple(rng, 0, 1, 1.0);
    const QuadMultiplier w = l2gain_quad(3, 3);
    CHECK(kind_of([&] { group_localize(m, w, 1, 3); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([&] { group_localize(m, w, 1, 2); }) == ErrorKind::InvalidArgument);
    // A direct w -> z path cannot meet an L2 objective at gamma = 0.
    Interconnection fed = m;
    fed.M22 = Mat::Identity(3, 3);
    CHECK(kind_of([&] { group_localize(fed, w, 2, 2); }) == ErrorKind::Infeasible);
}
