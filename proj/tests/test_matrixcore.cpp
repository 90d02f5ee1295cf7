#include "iqcloc/error.hpp"
#include "iqcloc/matrixcore.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace iqcloc;
using iqcloc::testing::random_matrix;

TEST_CASE("orth_complement of axis-aligned row") {
    Mat u(1, 2);
    u << 1, 0;
    const Mat w = orth_complement(u);
    REQUIRE(w.rows() == 2);
    REQUIRE(w.cols() == 1);
    CHECK(std::abs(w(0, 0)) < 1e-14);
    CHECK(std::abs(std::abs(w(1, 0)) - 1.0) < 1e-14);
}

TEST_CASE("orth_complement of [1 1]") {
    Mat u(1, 2);
    u << 1, 1;
    Mat w = orth_complement(u);
    REQUIRE(w.cols() == 1);
    // null space of U^T U = [[1,1],[1,1]] is spanned by (1,-1)/sqrt(2), up to sign
    if (w(0, 0) < 0) w = -w;
    CHECK(w(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
    CHECK(w(1, 0) == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("orth_complement of square identity is empty") {
    const Mat w = orth_complement(Mat::Identity(2, 2));
    CHECK(w.rows() == 2);
    CHECK(w.cols() == 0);
}

TEST_CASE("orth_complement rejects rank-deficient input") {
    Mat u(2, 3);
    u << 1, 2, 3, 2, 4, 6;
    CHECK_THROWS_AS(orth_complement(u), Error);
    try {
        orth_complement(u);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::RankDeficient);
    }
}

TEST_CASE("orth_complement property: annihilates and is orthonormal") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        const int k = iqcloc::testing::uniform_int(rng, 1, 20);
        const int n = iqcloc::testing::uniform_int(rng, k + 1, 40);
        const Mat u = random_matrix(rng, k, n);
        const Mat w = orth_complement(u);
        REQUIRE(w.cols() == n - k);
        CHECK(max_abs(u * w) <= 1e-10);
        CHECK(max_abs(w.transpose() * w - Mat::Identity(n - k, n - k)) <= 1e-10);
        // [U^T W] has maximal rank
        Mat joined(n, n);
        joined << u.transpose(), w;
        CHECK(numerical_rank(joined) == n);
    }
}

TEST_CASE("null_space tolerates zero and rank-deficient matrices") {
    CHECK(null_space(Mat::Zero(2, 3)).cols() == 3);
    CHECK(null_space(Mat(0, 4)).cols() == 4);
    Mat u(2, 3);
    u << 1, 2, 3, 2, 4, 6;
    const Mat w = null_space(u);
    CHECK(w.cols() == 2);
    CHECK(max_abs(u * w) < 1e-12);
}

TEST_CASE("sigma_max examples") {
    CHECK(sigma_max(Eigen::Vector2d(3, -1).asDiagonal().toDenseMatrix()) == doctest::Approx(3.0));
    CHECK(sigma_max(Mat::Zero(2, 2)) == 0.0);
    Mat a(2, 2);
    a << 0, 2, 0, 0;
    CHECK(sigma_max(a) == doctest::Approx(2.0));
}

TEST_CASE("sigma_max is absolutely homogeneous") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        const Mat a = random_matrix(rng, 4, 3);
        const double alpha = iqcloc::testing::uniform(rng, -5, 5);
        CHECK(sigma_max(alpha * a) == doctest::Approx(std::abs(alpha) * sigma_max(a)).epsilon(1e-12));
    }
}

TEST_CASE("is_psd / is_nsd examples") {
    CHECK(is_psd(Mat::Identity(2, 2), 1e-9));
    CHECK_FALSE(is_psd(Eigen::Vector2d(1, -1e-6).asDiagonal().toDenseMatrix(), 1e-9));
    Mat s(2, 2);
    s << 2, 1, 1, 1;
    CHECK(is_psd(s, 1e-9));
    CHECK(is_nsd(-s, 1e-9));
    CHECK_FALSE(is_nsd(s, 1e-9));
}

TEST_CASE("PSD cone is closed under addition") {
    std::mt19937 rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        const Mat s = iqcloc::testing::random_psd(rng, 5, 2);
        const Mat t = iqcloc::testing::random_psd(rng, 5, 3);
        REQUIRE(is_psd(s, 1e-9));
        REQUIRE(is_psd(t, 1e-9));
        CHECK(is_psd(s + t, 1e-9));
    }
}

TEST_CASE("kron examples") {
    CHECK(max_abs(kron(Mat::Identity(2, 2), Mat::Identity(2, 2)) - Mat::Identity(4, 4)) == 0.0);
    Mat ones(2, 1);
    ones << 1, 1;
    const Mat two = Mat::Constant(1, 1, 2.0);
    const Mat k = kron(ones, two);
    CHECK(k.rows() == 2);
    CHECK(k.cols() == 1);
    CHECK(k(0, 0) == 2.0);
    CHECK(k(1, 0) == 2.0);

    Mat swap(2, 2);
    swap << 0, 1, 1, 0;
    Mat expected = Mat::Zero(4, 4);
    expected(0, 1) = expected(1, 0) = expected(2, 3) = expected(3, 2) = 1.0;
    CHECK(max_abs(kron(Mat::Identity(2, 2), swap) - expected) == 0.0);
}

TEST_CASE("block assembly checks shapes") {
    const Mat a = Mat::Ones(2, 2), b = Mat::Zero(2, 1), c = Mat::Ones(1, 2), d = Mat::Ones(1, 1);
    const Mat m = block_matrix({{a, b}, {c, d}});
    CHECK(m.rows() == 3);
    CHECK(m.cols() == 3);
    CHECK_THROWS_AS(block_matrix({{a, c}, {c, d}}), Error);
    const Mat bd = blkdiag({a, d});
    CHECK(bd(2, 2) == 1.0);
    CHECK(bd(0, 2) == 0.0);
}

TEST_CASE("symmetry tolerance is relative") {
    Mat s(2, 2);
    s << 1e6, 1.0, 1.0 + 1e-3, 1.0;
    CHECK(is_symmetric(s));
    s(1, 0) = 2.0;
    CHECK_FALSE(is_symmetric(s));
}
