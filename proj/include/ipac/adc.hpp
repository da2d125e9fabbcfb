// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>

#include "ipac/channel.hpp"
#include "ipac/common.hpp"

namespace ipac {

/// Distortion factor of the additive quantization noise model: table values
/// for 1..5 bits, sqrt(3)*pi/2 * 2^(-2b) above, zero for infinite resolution.
double beta_for_bits(const AdcResolution& adc);

/// Scaling gain alpha = 1 - beta. Throws for non-positive bit widths.
double alpha_for_bits(const AdcResolution& adc);

/// Post-ADC receive vector together with the noise model it was drawn from.
struct QuantizedObservation {
    CVec samples;                     // scaled signal + scaled channel noise + distortion
    double channel_noise_var = 0.0;   // per complex sample, before scaling
    double quant_noise_var = 0.0;     // diagonal of the distortion covariance (scalar broadcast)
    double effective_noise_var = 0.0; // alpha^2 * channel + distortion
    double alpha = 1.0;
};

/// Statistical ADC surrogate: scales the noiseless receive vector, adds the
/// scaled channel noise and a Gaussian distortion term whose variance follows
/// the analytic per-sample receive power (signal power from the realized path
/// gains plus channel noise). mean_symbol_energy is the average transmit
/// symbol energy (1 for the unit-energy pilots).
QuantizedObservation quantize(const CVec& r_clean, const PathSet& paths, double channel_noise_var,
                              const AdcResolution& adc, std::mt19937_64& rng,
                              double mean_symbol_energy = 1.0);

/// Scalar diagonal of the effective noise covariance seen after the ADC.
double effective_noise_variance(const PathSet& paths, double channel_noise_var,
                                const AdcResolution& adc, double mean_symbol_energy = 1.0);

}  // namespace ipac
