// SPDX-License-Identifier: Apache-2.0
#include "ipac/channel.hpp"

#include <cmath>

#include "ipac/otfs.hpp"

namespace ipac {

double PathSet::total_gain_power() const {
    double p = 0.0;
    for (const auto& path : paths) p += std::norm(path.gain);
    return p;
}

CVec steering_vector(double aoa_rad, int num_elements) {
    if (num_elements < 1) throw std::invalid_argument("steering_vector: need at least one element");
    CVec a(num_elements);
    double ramp = kPi * std::sin(aoa_rad);
    for (int n = 0; n < num_elements; ++n) a(n) = cplx(std::cos(n * ramp), std::sin(n * ramp));
    return a;
}

PathSet sample_paths(const FrameConfig& cfg, const Geometry& geom, std::mt19937_64& rng) {
    const int num_paths = cfg.num_paths;
    PathSet set;
    set.paths.resize(num_paths);

    // Exponential power-delay profile over the fixed delay taps 1..P.
    double norm = 0.0;
    for (int p = 0; p < num_paths; ++p) norm += std::exp(-cfg.pdp_decay * (p + 1));
    for (int p = 0; p < num_paths; ++p) {
        set.paths[p].delay_bin = p + 1;
        set.paths[p].power_weight = std::exp(-cfg.pdp_decay * (p + 1)) / norm;
    }

    // Doppler: peak spread times the cosine of a uniform ride angle.
    std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
    for (int p = 0; p < num_paths; ++p) {
        double total = cfg.max_doppler_bins * std::cos(angle(rng));
        int bin = static_cast<int>(std::lround(total));
        set.paths[p].doppler_bin = bin;
        set.paths[p].doppler_frac = total - bin;
    }

    for (int p = 0; p < num_paths; ++p)
        set.paths[p].gain = std::sqrt(set.paths[p].power_weight) * standard_complex_gaussian(rng);

    // LoS angle from geometry; non-LoS angles from the sector with keep-outs.
    LosParams los = derive_los(geom);
    set.paths[0].aoa_rad = los.aoa_rad;
    const double sector = cfg.nlos_sector_deg * kPi / 180.0;
    const double guard = cfg.nlos_guard_deg * kPi / 180.0;
    const double min_sep = cfg.nlos_min_sep_deg * kPi / 180.0;
    std::uniform_real_distribution<double> sector_draw(-sector, sector);
    for (int p = 1; p < num_paths; ++p) {
        for (int attempt = 0; attempt < 10000; ++attempt) {
            double theta = sector_draw(rng);
            bool clear = std::abs(theta - los.aoa_rad) >= guard;
            for (int q = 1; q < p && clear; ++q)
                clear = std::abs(theta - set.paths[q].aoa_rad) >= min_sep;
            if (clear) {
                set.paths[p].aoa_rad = theta;
                break;
            }
            if (attempt == 9999)
                throw std::runtime_error("sample_paths: cannot place non-LoS angle; sector too crowded");
        }
    }
    return set;
}

CVec delay_doppler_shift(const CVec& s, int delay_bin, double doppler) {
    const int n = static_cast<int>(s.size());
    if (delay_bin < 0 || delay_bin >= n)
        throw std::invalid_argument("delay_doppler_shift: delay out of range");
    CVec out(n);
    const double step = 2.0 * kPi * doppler / n;
    for (int q = 0; q < n; ++q) {
        int src = q - delay_bin;
        if (src < 0) src += n;
        double phase = step * src;
        out(q) = s(src) * cplx(std::cos(phase), std::sin(phase));
    }
    return out;
}

ChannelOperator::ChannelOperator(PathSet paths, int num_subcarriers, int num_timeslots, int num_antennas)
    : paths_(std::move(paths)),
      num_subcarriers_(num_subcarriers),
      num_timeslots_(num_timeslots),
      num_antennas_(num_antennas) {
    const int frame = num_subcarriers_ * num_timeslots_;
    for (const auto& p : paths_.paths)
        if (p.delay_bin < 0 || p.delay_bin >= frame)
            throw std::invalid_argument("ChannelOperator: delay out of range");
}

CVec ChannelOperator::apply(const CVec& s) const {
    const int frame = frame_size();
    if (s.size() != frame) throw std::invalid_argument("ChannelOperator::apply: length mismatch");
    CVec out = CVec::Zero(static_cast<Eigen::Index>(frame) * num_antennas_);
    for (const auto& p : paths_.paths) {
        CVec shifted = delay_doppler_shift(s, p.delay_bin, p.doppler_total());
        CVec a = steering_vector(p.aoa_rad, num_antennas_);
        for (int n = 0; n < num_antennas_; ++n)
            out.segment(static_cast<Eigen::Index>(n) * frame, frame) += (p.gain * a(n)) * shifted;
    }
    return out;
}

CMat effective_dd_channel(const ChannelOperator& op, LinkDirection dir) {
    const int frame = op.frame_size();
    const int m = op.num_subcarriers();
    const int n = op.num_timeslots();
    CMat g(static_cast<Eigen::Index>(frame) * op.num_antennas(), frame);
    CVec unit = CVec::Zero(frame);
    for (int c = 0; c < frame; ++c) {
        unit(c) = 1.0;
        g.col(c) = otfs_demodulate(op.apply(time_from_dd(unit, m, n)), m, n, op.num_antennas());
        unit(c) = 0.0;
    }
    if (dir == LinkDirection::downlink) return g.transpose();
    return g;
}

}  // namespace ipac
