// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "ipac/channel.hpp"
#include "ipac/common.hpp"
#include "ipac/config.hpp"
#include "ipac/otfs.hpp"

namespace ipac {

/// Forward spatially smoothed covariance over overlapping subarrays.
struct SmoothedCovariance {
    CMat cov;                // subarray_length x subarray_length, Hermitian
    int subarray_count = 0;  // num antennas - subarray length + 1
    int snapshots = 0;
};

/// antenna_snapshots has one row per antenna, one column per time sample.
SmoothedCovariance smoothed_covariance(const CMat& antenna_snapshots, int subarray_length);

struct MusicSpectrum {
    std::vector<double> grid_rad;      // scan angles
    std::vector<double> power;        // pseudo-spectrum values
    std::vector<double> peak_angles;  // top peaks, descending spectrum value
    bool complete = true;             // false when fewer resolvable peaks than requested
};

/// Noise-subspace scan over [-pi/2, pi/2] with local quadratic peak refinement.
MusicSpectrum music_aoa(const SmoothedCovariance& cov, int num_sources, double grid_step_rad);

struct PathEstimate {
    double aoa_rad = 0.0;
    int doppler_bin = 0;
    double doppler_frac = 0.0;
    cplx gain{0.0, 0.0};
    double residual_energy = 0.0;  // after this path was cancelled

    double doppler_total() const { return doppler_bin + doppler_frac; }
};

/// Path-wise interference cancellation against the DD-domain observation:
/// per delay tap, jointly picks an unused angle candidate and the integer
/// Doppler by the correlation metric, refines the fractional Doppler with a
/// golden-section search, solves the gain in closed form, and subtracts the
/// reconstructed contribution from the residual.
std::vector<PathEstimate> estimate_paths(const CVec& y_dd, const DdGrid& pilot,
                                         const std::vector<double>& aoa_candidates,
                                         const FrameConfig& cfg, double alpha);

/// Position from the LoS bearing and the known LoS delay.
Eigen::Vector2d position_fix(double aoa_rad, double los_delay_s);

}  // namespace ipac
