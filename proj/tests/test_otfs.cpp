// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>

#include "ipac/otfs.hpp"

using namespace ipac;

namespace {

// Dense Kronecker oracle for (A kron I_m) x, independent of the fast path.
CVec kron_with_identity_apply(const CMat& a, int m, const CVec& x) {
    const int n = static_cast<int>(a.rows());
    CMat big = CMat::Zero(static_cast<Eigen::Index>(n) * m, static_cast<Eigen::Index>(n) * m);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            big.block(static_cast<Eigen::Index>(r) * m, static_cast<Eigen::Index>(c) * m, m, m) =
                a(r, c) * CMat::Identity(m, m);
    return big * x;
}

CVec random_vec(int n, std::mt19937_64& rng) {
    CVec v(n);
    for (int i = 0; i < n; ++i) v(i) = standard_complex_gaussian(rng);
    return v;
}

}  // namespace

TEST_CASE("modulation of a single delay-Doppler pulse spreads evenly over timeslots") {
    const int m = 4, n = 8;
    DdGrid g;
    g.symbols = CMat::Zero(m, n);
    g.symbols(0, 0) = 1.0;
    CVec s = otfs_modulate(g);

    // Oracle: dense (F_N^H kron I_M) against the vectorized grid.
    CVec expected = kron_with_identity_apply(unitary_dft(n).adjoint(), m, g.vectorized());
    CHECK((s - expected).cwiseAbs().maxCoeff() < 1e-12);

    for (int slot = 0; slot < n; ++slot)
        for (int q = 0; q < m; ++q) {
            cplx want = (q == 0) ? cplx(1.0 / std::sqrt(double(n)), 0.0) : cplx(0.0, 0.0);
            CHECK(std::abs(s(q + slot * m) - want) < 1e-12);
        }
}

TEST_CASE("zero grid modulates to zero") {
    DdGrid g;
    g.symbols = CMat::Zero(16, 8);
    CHECK(otfs_modulate(g).norm() == 0.0);
}

TEST_CASE("transforms preserve the 2-norm") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 20; ++i) {
        CVec x = random_vec(16 * 8, rng);
        CVec s = time_from_dd(x, 16, 8);
        CHECK(std::abs(s.squaredNorm() - x.squaredNorm()) < 1e-12 * x.squaredNorm());

        CVec r = random_vec(16 * 8 * 2, rng);
        CVec y = otfs_demodulate(r, 16, 8, 2);
        CHECK(std::abs(y.squaredNorm() - r.squaredNorm()) < 1e-12 * r.squaredNorm());
    }
}

TEST_CASE("modulate then demodulate over an identity channel is the identity") {
    std::mt19937_64 rng(11);
    CVec x = random_vec(16 * 8, rng);
    CVec y = otfs_demodulate(otfs_modulate(DdGrid::from_vector(x, 16, 8)), 16, 8, 1);
    CHECK((y - x).cwiseAbs().maxCoeff() < 1e-12);

    CHECK(otfs_demodulate(CVec::Zero(16 * 8), 16, 8, 1).norm() == 0.0);
}

TEST_CASE("vectorization round-trips column-major") {
    std::mt19937_64 rng(5);
    DdGrid g;
    g.symbols = CMat(3, 2);
    for (int c = 0; c < 2; ++c)
        for (int r = 0; r < 3; ++r) g.symbols(r, c) = random_vec(1, rng)(0);
    DdGrid back = DdGrid::from_vector(g.vectorized(), 3, 2);
    CHECK((back.symbols - g.symbols).cwiseAbs().maxCoeff() == 0.0);
    // Pin the convention: entry (r, c) sits at index r + c*rows.
    CHECK(g.vectorized()(1 + 1 * 3) == g.symbols(1, 1));
}

TEST_CASE("length mismatches are rejected") {
    CHECK_THROWS_AS(time_from_dd(CVec::Zero(7), 4, 2), std::invalid_argument);
    CHECK_THROWS_AS(otfs_demodulate(CVec::Zero(100), 16, 8, 2), std::invalid_argument);
}

TEST_CASE("pilot grid is deterministic, QPSK, and exactly unit energy") {
    auto rng1 = make_rng(42, {1});
    auto rng2 = make_rng(42, {1});
    DdGrid a = generate_pilot_grid(16, 8, rng1);
    DdGrid b = generate_pilot_grid(16, 8, rng2);
    CHECK((a.symbols - b.symbols).cwiseAbs().maxCoeff() == 0.0);

    double energy = 0.0;
    for (int c = 0; c < 8; ++c)
        for (int r = 0; r < 16; ++r) {
            cplx v = a.symbols(r, c);
            CHECK(std::abs(std::abs(v.real()) - M_SQRT1_2) < 1e-15);
            CHECK(std::abs(std::abs(v.imag()) - M_SQRT1_2) < 1e-15);
            energy += std::norm(v);
        }
    CHECK(energy / (16 * 8) == doctest::Approx(1.0).epsilon(1e-14));
}
