#include "affinerf/linalg.hpp"

#include <doctest.h>

#include <cmath>

using namespace affinerf;
using namespace affinerf::linalg;

namespace {
constexpr double kPi = 3.14159265358979323846;

Vector random_coords(int d, Rng& rng, double bound = kPi) {
    Vector z(so_dim(d));
    for (Eigen::Index i = 0; i < z.size(); ++i)
        z[i] = rng.uniform(-bound, bound);
    return z;
}
} // namespace

TEST_SUITE_BEGIN("linalg");

TEST_CASE("pack fills the upper triangle row by row") {
    SUBCASE("d=2") {
        Vector z(1);
        z << 0.7;
        const Matrix A = pack_antisymmetric(z, 2);
        CHECK(A(0, 0) == 0.0);
        CHECK(A(0, 1) == 0.7);
        CHECK(A(1, 0) == -0.7);
        CHECK(A(1, 1) == 0.0);
    }
    SUBCASE("d=3") {
        Vector z(3);
        z << 1.0, 2.0, 3.0;
        const Matrix A = pack_antisymmetric(z, 3);
        Matrix expected(3, 3);
        expected << 0, 1, 2, -1, 0, 3, -2, -3, 0;
        CHECK((A - expected).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("zero maps to zero") {
        const Matrix A = pack_antisymmetric(Vector::Zero(so_dim(6)), 6);
        CHECK(A.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("length mismatch names both lengths") {
        CHECK_THROWS_WITH_AS(pack_antisymmetric(Vector::Zero(4), 3),
                             doctest::Contains("expected 3"), std::invalid_argument);
    }
}

TEST_CASE("unpack inverts pack") {
    SUBCASE("frozen d=3 case") {
        Matrix A(3, 3);
        A << 0, 0.5, -0.25, -0.5, 0, 1.5, 0.25, -1.5, 0;
        const Vector z = unpack_antisymmetric(A);
        CHECK(z[0] == 0.5);
        CHECK(z[1] == -0.25);
        CHECK(z[2] == 1.5);
    }
    SUBCASE("zero matrix, d=4") {
        const Vector z = unpack_antisymmetric(Matrix::Zero(4, 4));
        CHECK(z.size() == 6);
        CHECK(z.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("round-trip is exact for random coordinates") {
        Rng rng(11);
        for (int trial = 0; trial < 100; ++trial) {
            const int d = 2 + static_cast<int>(rng.below(9)); // d in 2..10
            const Vector z = random_coords(d, rng);
            const Vector back = unpack_antisymmetric(pack_antisymmetric(z, d));
            CHECK((back - z).cwiseAbs().maxCoeff() == 0.0);
        }
    }
    SUBCASE("rejects non-antisymmetric input") {
        Matrix A = Matrix::Zero(3, 3);
        A(0, 1) = 1.0;
        A(1, 0) = -1.0 + 1e-6;
        CHECK_THROWS_AS(unpack_antisymmetric(A), std::invalid_argument);
    }
}

TEST_CASE("matrix_exp on so(d)") {
    SUBCASE("zero maps to identity") {
        const Matrix W = matrix_exp(Matrix::Zero(4, 4));
        CHECK((W - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-15);
    }
    SUBCASE("planar rotation closed form") {
        // exp([[0, t], [-t, 0]]) = [[cos t, sin t], [-sin t, cos t]]
        Vector z(1);
        z << kPi / 2.0;
        const Matrix W = matrix_exp(pack_antisymmetric(z, 2));
        Matrix expected(2, 2);
        expected << 0, 1, -1, 0;
        CHECK((W - expected).cwiseAbs().maxCoeff() <= 1e-12);

        for (double theta : {0.3, -1.2, 2.9}) {
            Vector zt(1);
            zt << theta;
            const Matrix Wt = matrix_exp(pack_antisymmetric(zt, 2));
            CHECK(Wt(0, 0) == doctest::Approx(std::cos(theta)).epsilon(1e-13));
            CHECK(Wt(0, 1) == doctest::Approx(std::sin(theta)).epsilon(1e-13));
        }
    }
    SUBCASE("random 5-d input gives a rotation and exp(-A) inverts it") {
        Rng rng(5);
        for (int trial = 0; trial < 20; ++trial) {
            const Matrix A = pack_antisymmetric(random_coords(5, rng), 5);
            const Matrix W = matrix_exp(A);
            CHECK(orthogonality_error(W) <= 1e-10);
            const Matrix round = matrix_exp(-A) * W;
            CHECK((round - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() <= 1e-10);
        }
    }
    SUBCASE("norm up to pi*sqrt(d) still yields rotations") {
        Rng rng(17);
        for (int d = 2; d <= 20; d += 3) {
            Matrix A = pack_antisymmetric(random_coords(d, rng), d);
            A *= kPi * std::sqrt(static_cast<double>(d)) / A.norm();
            CHECK(is_rotation(matrix_exp(A)));
        }
    }
    SUBCASE("non-finite entries are rejected") {
        Matrix A = Matrix::Zero(2, 2);
        A(0, 1) = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(matrix_exp(A), std::runtime_error);
    }
}

TEST_CASE("random_rotation") {
    SUBCASE("SO(1) is trivial") {
        Rng rng(1);
        const Matrix W = random_rotation(1, rng);
        CHECK(W.rows() == 1);
        CHECK(W(0, 0) == 1.0);
    }
    SUBCASE("deterministic for a fixed seed") {
        Rng a(99), b(99);
        const Matrix Wa = random_rotation(3, a);
        const Matrix Wb = random_rotation(3, b);
        CHECK((Wa - Wb).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("valid rotation for d up to 20") {
        Rng rng(7);
        for (int d = 1; d <= 20; ++d)
            CHECK(is_rotation(random_rotation(d, rng)));
    }
    SUBCASE("first column is centered, Monte Carlo") {
        // Haar symmetry: E[W e1] = 0
        Rng rng(123);
        Vector mean = Vector::Zero(3);
        const int n = 1000;
        for (int i = 0; i < n; ++i)
            mean += random_rotation(3, rng).col(0);
        mean /= static_cast<double>(n);
        CHECK(mean.cwiseAbs().maxCoeff() <= 0.1);
    }
}

TEST_SUITE_END();
