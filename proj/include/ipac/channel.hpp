// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <vector>

#include "ipac/common.hpp"
#include "ipac/config.hpp"

namespace ipac {

/// One propagation path in the delay-Doppler-angular domain.
struct Path {
    cplx gain{0.0, 0.0};
    int delay_bin = 0;          // integer delay tap
    int doppler_bin = 0;        // integer Doppler tap
    double doppler_frac = 0.0;  // in [-1/2, 1/2]
    double aoa_rad = 0.0;
    double power_weight = 0.0;  // PDP variance of the gain

    double doppler_total() const { return doppler_bin + doppler_frac; }
};

struct PathSet {
    std::vector<Path> paths;

    int size() const { return static_cast<int>(paths.size()); }
    double total_gain_power() const;  // sum |h_p|^2 over the realization
};

/// Half-wavelength ULA response, element n = exp(j*pi*n*sin(theta)).
CVec steering_vector(double aoa_rad, int num_elements);

/// Draws gains (complex Gaussian, exponential PDP), Doppler from the
/// cosine-of-uniform-angle model, and non-LoS angles from the configured
/// sector. Path 0 is the LoS path with geometric angle; delays are 1..P.
PathSet sample_paths(const FrameConfig& cfg, const Geometry& geom, std::mt19937_64& rng);

/// Doppler phase ramp followed by a cyclic delay of the frame samples.
CVec delay_doppler_shift(const CVec& s, int delay_bin, double doppler);

/// Factored action of the multipath operator: frame samples in, stacked
/// per-antenna receive samples out. Never materialized as a dense matrix.
class ChannelOperator {
public:
    ChannelOperator(PathSet paths, int num_subcarriers, int num_timeslots, int num_antennas);

    CVec apply(const CVec& s) const;

    const PathSet& paths() const { return paths_; }
    int num_antennas() const { return num_antennas_; }
    int frame_size() const { return num_subcarriers_ * num_timeslots_; }
    int num_subcarriers() const { return num_subcarriers_; }
    int num_timeslots() const { return num_timeslots_; }

private:
    PathSet paths_;
    int num_subcarriers_;
    int num_timeslots_;
    int num_antennas_;
};

enum class LinkDirection { uplink, downlink };

/// Dense DD-domain channel. Uplink: DD symbols -> stacked per-antenna DD
/// observations. Downlink: the reciprocal transpose of the uplink matrix.
CMat effective_dd_channel(const ChannelOperator& op, LinkDirection dir);

}  // namespace ipac
