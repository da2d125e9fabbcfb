// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "ipac/common.hpp"

namespace ipac {

/// Zero-forcing transmit precoder with Frobenius power normalization.
struct Precoder {
    CMat weights;           // (frame * num_tx) x frame
    double gain = 1.0;      // nominal per-symbol channel gain after precoding
    bool regularized = false;
};

/// Right pseudo-inverse of the estimated downlink channel, scaled so that
/// ||weights||_F^2 equals the frame size. Falls back to a ridge solve when the
/// Gram matrix is numerically rank deficient.
Precoder build_precoder(const CMat& est_downlink_channel);

/// Channel seen by the user: true downlink channel times the precoder.
CMat effective_link(const CMat& true_downlink_channel, const Precoder& precoder);

/// y = G_eff x + n with circularly symmetric noise of the given variance.
CVec downlink_transmit(const CMat& effective_channel, const CVec& data, double noise_var,
                       std::mt19937_64& rng);

/// One-shot LMMSE equalizer against an assumed effective channel.
CVec lmmse_detect(const CVec& y, const CMat& assumed_channel, double noise_var);

/// Factored form for running many frames against the same assumed channel.
class LmmseDetector {
public:
    LmmseDetector(const CMat& assumed_channel, double noise_var);
    CVec detect(const CVec& y) const;

private:
    Eigen::LDLT<CMat> factor_;
    CMat assumed_adjoint_;
};

// Gray-coded QPSK, two bits per symbol, unit symbol energy.
CVec qpsk_modulate(const std::vector<std::uint8_t>& bits);
std::vector<std::uint8_t> qpsk_hard_demap(const CVec& symbols);

struct LinkResult {
    long bits_sent = 0;
    long bit_errors = 0;
    double ber() const { return bits_sent ? static_cast<double>(bit_errors) / bits_sent : 0.0; }
};

}  // namespace ipac
