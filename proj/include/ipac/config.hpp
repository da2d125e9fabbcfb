// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ipac/common.hpp"

namespace ipac {

/// Scenario constants: OTFS grid, carrier, arrays, ADC and sweep knobs.
/// Immutable after validation; shared read-only across trial workers.
struct FrameConfig {
    int num_subcarriers = 16;          // delay bins per frame
    int num_timeslots = 8;             // Doppler bins per frame
    double subcarrier_spacing_hz = 15e3;
    double carrier_hz = 4e9;
    int num_tx_antennas = 16;
    int num_rx_antennas = 16;
    int num_paths = 3;
    int subarray_length = 8;           // spatial-smoothing window
    AdcResolution adc = AdcResolution::infinite();
    double max_doppler_bins = 0.59;    // peak |k + kappa| over paths
    double pdp_decay = 0.1;            // exponential power-delay-profile rate
    double user_x_m = 883.0;
    double user_y_m = 883.0;
    std::vector<double> snr_db = {0, 10, 20, 30, 40, 50};
    int trials = 500;
    std::uint64_t seed = 1;

    // Estimator knobs
    double nlos_sector_deg = 60.0;     // non-LoS angles drawn uniform in +/- sector
    double nlos_guard_deg = 5.0;       // keep-out around the LoS angle
    double nlos_min_sep_deg = 5.0;     // pairwise keep-out between non-LoS angles
    double music_grid_deg = 0.1;
    double doppler_refine_tol = 1e-4;  // golden-section stop width, in Doppler bins
    double aoa_refine_halfwidth_deg = 1.0;  // trust region around each MUSIC peak
    double aoa_refine_tol_deg = 1e-4;       // golden-section stop width
    bool joint_gain_refit = false;     // re-solve all gains jointly after the forward pass
    int data_frames_per_trial = 10;    // downlink payload frames per channel draw

    int grid_size() const { return num_subcarriers * num_timeslots; }
    double symbol_duration_s() const { return 1.0 / subcarrier_spacing_hz; }
    double sample_period_s() const { return 1.0 / (num_subcarriers * subcarrier_spacing_hz); }
    double wavelength_m() const { return kSpeedOfLight / carrier_hz; }
    int subarray_count() const { return num_rx_antennas - subarray_length + 1; }
    double delay_bin_seconds(int bin) const { return bin * sample_period_s(); }
};

/// User terminal position relative to a base station fixed at the origin.
struct Geometry {
    Eigen::Vector2d user_m{883.0, 883.0};

    double range_m() const { return user_m.norm(); }
    Eigen::Vector2d direction() const { return user_m / user_m.norm(); }
};

struct LosParams {
    double delay_s = 0.0;
    double aoa_rad = 0.0;
};

/// LoS delay/angle from geometry. Throws on a zero-norm position.
LosParams derive_los(const Geometry& geom);

/// Forward model: position reached at the given one-way delay and bearing.
Eigen::Vector2d position_from_los(double delay_s, double aoa_rad);

struct ValidationReport {
    std::vector<std::string> errors;
    int subarray_count = 0;
    bool ok() const { return errors.empty(); }
};

/// Checks every structural invariant; reports all violations by name.
ValidationReport validate(const FrameConfig& cfg);

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Plain-text key=value file, '#' comments. Unknown keys are an error.
FrameConfig load_config_file(const std::string& path);
FrameConfig parse_config_text(const std::string& text);

/// Canonical key=value rendering (used for the config hash in CSV metadata).
std::string config_to_text(const FrameConfig& cfg);

Geometry geometry_from_config(const FrameConfig& cfg);

/// User position with the range snapped to the LoS delay bin, keeping the bearing.
/// Estimation errors are measured against this effective position so the known
/// integer-delay assumption and the configured coordinates stay consistent.
Geometry effective_geometry(const FrameConfig& cfg);

}  // namespace ipac
