// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "ipac/adc.hpp"
#include "ipac/estimator.hpp"
#include "ipac/otfs.hpp"

using namespace ipac;

namespace {

CMat source_snapshots(const std::vector<double>& angles, const std::vector<CVec>& waveforms,
                      int num_antennas, double noise_var, std::mt19937_64& rng) {
    const int snaps = static_cast<int>(waveforms[0].size());
    CMat y = CMat::Zero(num_antennas, snaps);
    for (size_t s = 0; s < angles.size(); ++s) {
        CVec a = steering_vector(angles[s], num_antennas);
        y += a * waveforms[s].transpose();
    }
    if (noise_var > 0) {
        double amp = std::sqrt(noise_var);
        for (int r = 0; r < num_antennas; ++r)
            for (int c = 0; c < snaps; ++c) y(r, c) += amp * standard_complex_gaussian(rng);
    }
    return y;
}

CVec random_waveform(int n, std::mt19937_64& rng) {
    CVec v(n);
    for (int i = 0; i < n; ++i) v(i) = standard_complex_gaussian(rng);
    return v;
}

}  // namespace

TEST_CASE("smoothed covariance of a broadside source is the all-ones dyad") {
    std::mt19937_64 rng(3);
    CVec wave = random_waveform(64, rng);
    CMat y = source_snapshots({0.0}, {wave}, 8, 0.0, rng);
    SmoothedCovariance cov = smoothed_covariance(y, 4);
    CHECK(cov.subarray_count == 5);
    double power = wave.squaredNorm() / 64.0;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) CHECK(std::abs(cov.cov(r, c) - power) < 1e-12 * power);
}

TEST_CASE("full-length subarray degenerates to the sample covariance") {
    std::mt19937_64 rng(5);
    CMat y(4, 32);
    for (int r = 0; r < 4; ++r) y.row(r) = random_waveform(32, rng).transpose();
    SmoothedCovariance cov = smoothed_covariance(y, 4);
    CHECK(cov.subarray_count == 1);
    CMat plain = y * y.adjoint() / 32.0;
    CHECK((cov.cov - 0.5 * (plain + plain.adjoint())).cwiseAbs().maxCoeff() < 1e-12);

    CHECK_THROWS_AS(smoothed_covariance(y, 5), std::invalid_argument);
    CHECK_THROWS_AS(smoothed_covariance(y.leftCols(2), 4), std::invalid_argument);
}

TEST_CASE("smoothing restores rank under fully coherent sources") {
    std::mt19937_64 rng(7);
    const int num_antennas = 8;
    CVec wave = random_waveform(128, rng);
    // Two angles locked to the identical waveform: coherent multipath.
    CMat y = source_snapshots({-0.5, 0.4}, {wave, wave}, num_antennas, 0.0, rng);

    SmoothedCovariance plain = smoothed_covariance(y, num_antennas);
    Eigen::SelfAdjointEigenSolver<CMat> eig_plain(plain.cov);
    auto plain_vals = eig_plain.eigenvalues();
    CHECK(plain_vals(num_antennas - 2) / plain_vals(num_antennas - 1) < 1e-10);

    SmoothedCovariance smoothed = smoothed_covariance(y, num_antennas / 2);
    Eigen::SelfAdjointEigenSolver<CMat> eig_smooth(smoothed.cov);
    auto vals = eig_smooth.eigenvalues();
    CHECK(vals(num_antennas / 2 - 2) / vals(num_antennas / 2 - 1) > 1e-3);
}

TEST_CASE("music resolves a single source to within half the beamwidth margin") {
    const double truth = 20.0 * kPi / 180.0;
    std::vector<double> errors;
    for (int trial = 0; trial < 100; ++trial) {
        auto rng = make_rng(trial, {11});
        CVec wave = random_waveform(128, rng);
        CMat y = source_snapshots({truth}, {wave}, 16, 1e-3 * wave.squaredNorm() / 128, rng);
        SmoothedCovariance cov = smoothed_covariance(y, 8);
        MusicSpectrum spec = music_aoa(cov, 1, 0.1 * kPi / 180.0);
        REQUIRE(spec.peak_angles.size() == 1);
        errors.push_back(std::abs(spec.peak_angles[0] - truth));
    }
    std::sort(errors.begin(), errors.end());
    CHECK(errors[errors.size() / 2] < 0.5 * kPi / 180.0);
}

TEST_CASE("music separates symmetric noiseless sources and flags shortfalls") {
    auto rng = make_rng(1, {13});
    CVec w1 = random_waveform(256, rng);
    CVec w2 = random_waveform(256, rng);
    double truth = 30.0 * kPi / 180.0;
    CMat y = source_snapshots({-truth, truth}, {w1, w2}, 16, 0.0, rng);
    SmoothedCovariance cov = smoothed_covariance(y, 8);
    MusicSpectrum spec = music_aoa(cov, 2, 0.1 * kPi / 180.0);
    REQUIRE(spec.peak_angles.size() == 2);
    CHECK(spec.complete);
    std::vector<double> found = spec.peak_angles;
    std::sort(found.begin(), found.end());
    CHECK(std::abs(found[0] + truth) < 0.2 * kPi / 180.0);
    CHECK(std::abs(found[1] - truth) < 0.2 * kPi / 180.0);

    CHECK_THROWS_AS(music_aoa(cov, 0, 0.01), std::invalid_argument);
    CHECK_THROWS_AS(music_aoa(cov, 8, 0.01), std::invalid_argument);

    // One physical source but two requested: the pool is padded and flagged.
    CMat y1 = source_snapshots({truth}, {w1}, 16, 0.0, rng);
    MusicSpectrum padded = music_aoa(smoothed_covariance(y1, 8), 2, 0.1 * kPi / 180.0);
    CHECK(padded.peak_angles.size() == 2);
}

namespace {

struct SyntheticScene {
    FrameConfig cfg;
    PathSet truth;
    DdGrid pilot;
    CVec y_dd;
};

SyntheticScene make_scene(const PathSet& truth, const FrameConfig& cfg, std::uint64_t seed) {
    SyntheticScene sc;
    sc.cfg = cfg;
    sc.truth = truth;
    auto rng = make_rng(seed, {17});
    sc.pilot = generate_pilot_grid(cfg.num_subcarriers, cfg.num_timeslots, rng);
    ChannelOperator op(truth, cfg.num_subcarriers, cfg.num_timeslots, cfg.num_rx_antennas);
    CVec r = op.apply(otfs_modulate(sc.pilot));
    sc.y_dd = otfs_demodulate(r, cfg.num_subcarriers, cfg.num_timeslots, cfg.num_rx_antennas);
    return sc;
}

}  // namespace

TEST_CASE("noiseless single path is recovered exactly when the atom matches") {
    FrameConfig cfg;
    cfg.num_subcarriers = 8;
    cfg.num_timeslots = 8;
    cfg.num_rx_antennas = 8;
    cfg.num_paths = 1;

    PathSet truth;
    truth.paths.push_back({cplx(0.7, -0.4), 1, 1, 0.21, 0.3, 1.0});
    SyntheticScene sc = make_scene(truth, cfg, 5);

    auto est = estimate_paths(sc.y_dd, sc.pilot, {0.3}, cfg, 1.0);
    REQUIRE(est.size() == 1);
    CHECK(std::abs(est[0].gain - truth.paths[0].gain) < 1e-3);
    CHECK(std::abs(est[0].doppler_total() - truth.paths[0].doppler_total()) < 1e-3);
    CHECK(est[0].residual_energy < 1e-4 * sc.y_dd.squaredNorm());
}

TEST_CASE("zero observation yields zero gains") {
    FrameConfig cfg;
    cfg.num_subcarriers = 8;
    cfg.num_timeslots = 4;
    cfg.num_rx_antennas = 4;
    cfg.num_paths = 2;
    auto rng = make_rng(2, {17});
    DdGrid pilot = generate_pilot_grid(8, 4, rng);
    CVec zeros = CVec::Zero(8 * 4 * 4);
    auto est = estimate_paths(zeros, pilot, {0.1, -0.2}, cfg, 1.0);
    for (const auto& e : est) CHECK(std::abs(e.gain) == 0.0);
}

TEST_CASE("near-orthogonal two-path construction recovers both gains") {
    FrameConfig cfg;
    cfg.num_subcarriers = 8;
    cfg.num_timeslots = 8;
    cfg.num_rx_antennas = 8;
    cfg.num_paths = 2;

    PathSet truth;
    truth.paths.push_back({cplx(1.0, 0.2), 1, -2, 0.0, 0.0, 0.5});
    truth.paths.push_back({cplx(-0.3, 0.8), 2, 3, 0.0, kPi / 2, 0.5});
    SyntheticScene sc = make_scene(truth, cfg, 6);

    auto est = estimate_paths(sc.y_dd, sc.pilot, {0.0, kPi / 2}, cfg, 1.0);
    REQUIRE(est.size() == 2);
    CHECK(std::abs(est[0].gain - truth.paths[0].gain) < 1e-6 * std::abs(truth.paths[0].gain));
    CHECK(std::abs(est[1].gain - truth.paths[1].gain) < 1e-6 * std::abs(truth.paths[1].gain));
    CHECK(est[0].doppler_bin == -2);
    CHECK(est[1].doppler_bin == 3);
}

TEST_CASE("residual energy never increases across cancellation steps") {
    FrameConfig cfg;
    cfg.num_subcarriers = 8;
    cfg.num_timeslots = 4;
    cfg.num_rx_antennas = 8;
    cfg.num_paths = 3;

    for (int rep = 0; rep < 10; ++rep) {
        auto rng = make_rng(rep, {19});
        PathSet truth;
        std::uniform_real_distribution<double> uang(-1.0, 1.0);
        std::uniform_real_distribution<double> ufrac(-0.5, 0.5);
        for (int p = 0; p < 3; ++p)
            truth.paths.push_back({standard_complex_gaussian(rng), p + 1, 0, ufrac(rng), uang(rng), 1.0});
        SyntheticScene sc = make_scene(truth, cfg, 100 + rep);
        // Noisy observation.
        for (Eigen::Index i = 0; i < sc.y_dd.size(); ++i)
            sc.y_dd(i) += 0.1 * standard_complex_gaussian(rng);

        std::vector<double> candidates = {truth.paths[0].aoa_rad, truth.paths[1].aoa_rad,
                                          truth.paths[2].aoa_rad};
        auto est = estimate_paths(sc.y_dd, sc.pilot, candidates, cfg, 1.0);
        double prev = sc.y_dd.squaredNorm();
        for (const auto& e : est) {
            CHECK(e.residual_energy <= prev * (1 + 1e-12));
            prev = e.residual_energy;
        }
    }
}

TEST_CASE("estimator argument errors") {
    FrameConfig cfg;
    cfg.num_subcarriers = 8;
    cfg.num_timeslots = 4;
    cfg.num_rx_antennas = 4;
    cfg.num_paths = 2;
    auto rng = make_rng(4, {17});
    DdGrid pilot = generate_pilot_grid(8, 4, rng);
    CVec y = CVec::Zero(8 * 4 * 4);
    CHECK_THROWS_AS(estimate_paths(y, pilot, {}, cfg, 1.0), std::invalid_argument);
    // Fewer candidates than paths: the pool runs dry.
    CHECK_THROWS_AS(estimate_paths(y, pilot, {0.1}, cfg, 1.0), std::runtime_error);
}

TEST_CASE("position fix geometry") {
    double range = 1248.8;
    Eigen::Vector2d fix = position_fix(kPi / 4, range / kSpeedOfLight);
    CHECK(fix.x() == doctest::Approx(883.0).epsilon(1e-4));
    CHECK(fix.y() == doctest::Approx(883.0).epsilon(1e-4));

    Geometry g;
    g.user_m = {550.0, 1200.0};
    LosParams los = derive_los(g);
    Eigen::Vector2d exact = position_fix(los.aoa_rad, los.delay_s);
    CHECK((exact - g.user_m).norm() < 1e-9);

    // Angular error maps to chord length at fixed range.
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> delta(-0.2, 0.2);
    for (int i = 0; i < 50; ++i) {
        double d = delta(rng);
        Eigen::Vector2d off = position_fix(los.aoa_rad + d, los.delay_s);
        double expected = 2.0 * g.user_m.norm() * std::abs(std::sin(d / 2.0));
        CHECK((off - g.user_m).norm() == doctest::Approx(expected).epsilon(1e-9));
    }
}
