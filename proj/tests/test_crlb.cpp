// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "ipac/adc.hpp"
#include "ipac/crlb.hpp"

using namespace ipac;

namespace {

FrameConfig small_config() {
    FrameConfig cfg;
    cfg.num_subcarriers = 4;
    cfg.num_timeslots = 2;
    cfg.num_rx_antennas = 2;
    cfg.num_paths = 2;
    return cfg;
}

PathSet random_paths(int count, int m, int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uang(-1.2, 1.2);
    std::uniform_real_distribution<double> ufrac(-0.5, 0.5);
    std::uniform_int_distribution<int> ubin(-n / 2, n / 2 - 1);
    PathSet set;
    set.paths.resize(count);
    for (int p = 0; p < count; ++p) {
        set.paths[p].gain = standard_complex_gaussian(rng);
        set.paths[p].delay_bin = (p + 1) % m;
        set.paths[p].doppler_bin = ubin(rng);
        set.paths[p].doppler_frac = ufrac(rng);
        set.paths[p].aoa_rad = uang(rng);
    }
    return set;
}

// Central difference of the channel action under one perturbed parameter.
CVec central_difference(const PathSet& base, int path, ParamKind kind, bool imag_part,
                        const CVec& s, int m, int n, int num_rx, double eps) {
    PathSet plus = base, minus = base;
    switch (kind) {
        case ParamKind::gain: {
            cplx delta = imag_part ? cplx(0.0, eps) : cplx(eps, 0.0);
            plus.paths[path].gain += delta;
            minus.paths[path].gain -= delta;
            break;
        }
        case ParamKind::angle:
            plus.paths[path].aoa_rad += eps;
            minus.paths[path].aoa_rad -= eps;
            break;
        case ParamKind::doppler:
            plus.paths[path].doppler_frac += eps;
            minus.paths[path].doppler_frac -= eps;
            break;
    }
    CVec hi = ChannelOperator(plus, m, n, num_rx).apply(s);
    CVec lo = ChannelOperator(minus, m, n, num_rx).apply(s);
    return (hi - lo) / (2.0 * eps);
}

}  // namespace

TEST_CASE("derivative actions match central differences") {
    FrameConfig cfg = small_config();
    std::mt19937_64 rng(13);
    const double eps = 1e-6;
    for (int rep = 0; rep < 25; ++rep) {
        PathSet set = random_paths(2, cfg.num_subcarriers, cfg.num_timeslots, rng);
        auto prng = make_rng(rep, {4});
        DdGrid pilot = generate_pilot_grid(cfg.num_subcarriers, cfg.num_timeslots, prng);
        CVec s = otfs_modulate(pilot);

        for (int p = 0; p < 2; ++p) {
            CVec gain_atom = channel_derivative_action(set, p, ParamKind::gain, s, 4, 2, 2);
            CVec fd_re = central_difference(set, p, ParamKind::gain, false, s, 4, 2, 2, eps);
            CVec fd_im = central_difference(set, p, ParamKind::gain, true, s, 4, 2, 2, eps);
            CHECK((gain_atom - fd_re).norm() <= 1e-5 * fd_re.norm());
            CHECK((cplx(0, 1) * gain_atom - fd_im).norm() <= 1e-5 * fd_im.norm());

            CVec ang = channel_derivative_action(set, p, ParamKind::angle, s, 4, 2, 2);
            CVec fd_ang = central_difference(set, p, ParamKind::angle, false, s, 4, 2, 2, eps);
            CHECK((ang - fd_ang).norm() <= 1e-5 * std::max(fd_ang.norm(), 1e-12));

            CVec dop = channel_derivative_action(set, p, ParamKind::doppler, s, 4, 2, 2);
            CVec fd_dop = central_difference(set, p, ParamKind::doppler, false, s, 4, 2, 2, eps);
            CHECK((dop - fd_dop).norm() <= 1e-5 * fd_dop.norm());
        }
    }
}

TEST_CASE("gain derivative is independent of the gain; endfire angle derivative vanishes") {
    FrameConfig cfg = small_config();
    std::mt19937_64 rng(17);
    PathSet set = random_paths(1, 4, 2, rng);
    auto prng = make_rng(3, {4});
    CVec s = otfs_modulate(generate_pilot_grid(4, 2, prng));

    CVec atom = channel_derivative_action(set, 0, ParamKind::gain, s, 4, 2, 2);
    PathSet rescaled = set;
    rescaled.paths[0].gain *= cplx(-3.7, 2.2);
    CVec atom2 = channel_derivative_action(rescaled, 0, ParamKind::gain, s, 4, 2, 2);
    CHECK((atom - atom2).cwiseAbs().maxCoeff() == 0.0);

    PathSet endfire = set;
    endfire.paths[0].aoa_rad = kPi / 2;
    CVec ang = channel_derivative_action(endfire, 0, ParamKind::angle, s, 4, 2, 2);
    CHECK(ang.cwiseAbs().maxCoeff() < 1e-12);

    CHECK_THROWS_AS(channel_derivative_action(set, 5, ParamKind::gain, s, 4, 2, 2),
                    std::invalid_argument);
}

TEST_CASE("single-path Fisher entry matches the scalar Gaussian bound") {
    FrameConfig cfg = small_config();
    cfg.num_paths = 1;
    std::mt19937_64 rng(19);
    PathSet set = random_paths(1, 4, 2, rng);
    auto prng = make_rng(8, {4});
    DdGrid pilot = generate_pilot_grid(4, 2, prng);
    CVec s = otfs_modulate(pilot);

    const double sigma2 = 0.04;
    FimResult fim = fisher_matrix(set, cfg, pilot, sigma2, 1.0);
    CVec mu = channel_derivative_action(set, 0, ParamKind::gain, s, 4, 2, 2);
    double expected = 2.0 * mu.squaredNorm() / sigma2;
    CHECK(fim.info(0, 0) == doctest::Approx(expected).epsilon(1e-12));
    // Restricted to the lone real gain parameter, the bound inverts directly.
    CHECK(1.0 / fim.info(0, 0) == doctest::Approx(sigma2 / (2.0 * mu.squaredNorm())).epsilon(1e-12));

    FimResult doubled = fisher_matrix(set, cfg, pilot, 2.0 * sigma2, 1.0);
    CHECK((doubled.info - 0.5 * fim.info).cwiseAbs().maxCoeff() < 1e-9 * fim.info.norm());
}

TEST_CASE("quantization floors the information at high SNR") {
    FrameConfig cfg = small_config();
    std::mt19937_64 rng(23);
    PathSet set = random_paths(2, 4, 2, rng);
    auto prng = make_rng(9, {4});
    DdGrid pilot = generate_pilot_grid(4, 2, prng);

    const double sigma2 = 1e-8;  // essentially noiseless channel
    AdcResolution one_bit = AdcResolution::finite(1);
    double sig_inf = effective_noise_variance(set, sigma2, AdcResolution::infinite());
    double sig_1 = effective_noise_variance(set, sigma2, one_bit);
    FimResult fim_inf = fisher_matrix(set, cfg, pilot, sig_inf, 1.0);
    FimResult fim_1 = fisher_matrix(set, cfg, pilot, sig_1, alpha_for_bits(one_bit));
    for (int i = 0; i < fim_inf.info.rows(); ++i)
        CHECK(fim_1.info(i, i) < fim_inf.info(i, i));
}

TEST_CASE("Fisher matrix is symmetric positive semidefinite across scenarios") {
    FrameConfig cfg = small_config();
    std::mt19937_64 rng(29);
    for (int rep = 0; rep < 100; ++rep) {
        PathSet set = random_paths(2, 4, 2, rng);
        auto prng = make_rng(rep, {6});
        DdGrid pilot = generate_pilot_grid(4, 2, prng);
        FimResult fim = fisher_matrix(set, cfg, pilot, 0.01, 0.9);
        CHECK((fim.info - fim.info.transpose()).cwiseAbs().maxCoeff() < 1e-9);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(fim.info);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * fim.info.norm());
        for (int p = 0; p < 2; ++p) {
            CHECK(fim.crlb_gain[p] == fim.crlb_diag(FimResult::re_gain_index(p)) +
                                          fim.crlb_diag(FimResult::im_gain_index(p)));
            CHECK(fim.crlb_gain[p] >= 0.0);
            CHECK(fim.crlb_aoa[p] >= 0.0);
            CHECK(fim.crlb_doppler[p] >= 0.0);
        }
    }
}

TEST_CASE("CRLB decreases with SNR and floors only for finite bits") {
    FrameConfig cfg = small_config();
    std::mt19937_64 rng(31);
    PathSet set = random_paths(2, 4, 2, rng);
    auto prng = make_rng(12, {4});
    DdGrid pilot = generate_pilot_grid(4, 2, prng);

    double prev_inf = 1e300, prev_3 = 1e300;
    double s_pow = set.total_gain_power();
    for (double snr = 0; snr <= 80; snr += 10) {
        double sigma2 = s_pow * db_to_linear(-snr);
        double crlb_inf = fisher_matrix(set, cfg, pilot,
                                        effective_noise_variance(set, sigma2, AdcResolution::infinite()),
                                        1.0).crlb_aoa[0];
        double crlb_3 = fisher_matrix(set, cfg, pilot,
                                      effective_noise_variance(set, sigma2, AdcResolution::finite(3)),
                                      alpha_for_bits(AdcResolution::finite(3))).crlb_aoa[0];
        CHECK(crlb_inf <= prev_inf * (1 + 1e-12));
        CHECK(crlb_3 <= prev_3 * (1 + 1e-12));
        prev_inf = crlb_inf;
        prev_3 = crlb_3;
    }
    // The infinite-resolution bound keeps falling; the 3-bit bound has hit its floor.
    double sigma_40 = s_pow * db_to_linear(-40.0);
    double sigma_80 = s_pow * db_to_linear(-80.0);
    double inf_40 = fisher_matrix(set, cfg, pilot,
                                  effective_noise_variance(set, sigma_40, AdcResolution::infinite()),
                                  1.0).crlb_aoa[0];
    double inf_80 = fisher_matrix(set, cfg, pilot,
                                  effective_noise_variance(set, sigma_80, AdcResolution::infinite()),
                                  1.0).crlb_aoa[0];
    CHECK(inf_80 < 1e-3 * inf_40);
    double b3_40 = fisher_matrix(set, cfg, pilot,
                                 effective_noise_variance(set, sigma_40, AdcResolution::finite(3)),
                                 alpha_for_bits(AdcResolution::finite(3))).crlb_aoa[0];
    double b3_80 = fisher_matrix(set, cfg, pilot,
                                 effective_noise_variance(set, sigma_80, AdcResolution::finite(3)),
                                 alpha_for_bits(AdcResolution::finite(3))).crlb_aoa[0];
    CHECK(b3_80 > 0.5 * b3_40);
}

TEST_CASE("position bound scales the marginal angle variance by the squared range") {
    FimResult fim;
    fim.info = Eigen::MatrixXd::Identity(4, 4);
    fim.crlb_diag = Eigen::VectorXd::Ones(4);
    fim.crlb_diag(FimResult::angle_index(0, 1)) = 1e-6;

    Geometry geom;
    geom.user_m = {883.0, 883.0};
    double bound = position_crlb(fim, geom);
    CHECK(bound == doctest::Approx(1.5595).epsilon(2e-4));
    CHECK(bound == doctest::Approx(geom.range_m() * geom.range_m() * 1e-6).epsilon(1e-12));

    Geometry farther;
    farther.user_m = {2 * 883.0, 2 * 883.0};
    CHECK(position_crlb(fim, farther) == doctest::Approx(4.0 * bound).epsilon(1e-12));

    Geometry on_axis;
    on_axis.user_m = {0.0, 1000.0};
    CHECK_THROWS_AS(position_crlb(fim, on_axis), std::domain_error);

    FimResult no_info = fim;
    no_info.info.row(FimResult::angle_index(0, 1)).setZero();
    no_info.info.col(FimResult::angle_index(0, 1)).setZero();
    CHECK(std::isinf(position_crlb(no_info, geom)));
}
