// SPDX-License-Identifier: Apache-2.0
#include "ipac/adc.hpp"

#include <cmath>

namespace ipac {

double beta_for_bits(const AdcResolution& adc) {
    if (!adc.is_finite()) return 0.0;
    switch (adc.bits) {
        case 1: return 0.3634;
        case 2: return 0.1175;
        case 3: return 0.03454;
        case 4: return 0.009497;
        case 5: return 0.002499;
        default:
            return std::sqrt(3.0) * kPi / 2.0 * std::pow(2.0, -2.0 * adc.bits);
    }
}

double alpha_for_bits(const AdcResolution& adc) {
    if (adc.is_finite() && adc.bits <= 0)
        throw std::invalid_argument("alpha_for_bits: bits must be >= 1");
    return 1.0 - beta_for_bits(adc);
}

double effective_noise_variance(const PathSet& paths, double channel_noise_var,
                                const AdcResolution& adc, double mean_symbol_energy) {
    double alpha = alpha_for_bits(adc);
    double beta = beta_for_bits(adc);
    double receive_power = paths.total_gain_power() * mean_symbol_energy + channel_noise_var;
    return alpha * alpha * channel_noise_var + alpha * beta * receive_power;
}

QuantizedObservation quantize(const CVec& r_clean, const PathSet& paths, double channel_noise_var,
                              const AdcResolution& adc, std::mt19937_64& rng,
                              double mean_symbol_energy) {
    const double alpha = alpha_for_bits(adc);
    const double beta = beta_for_bits(adc);
    const double receive_power = paths.total_gain_power() * mean_symbol_energy + channel_noise_var;
    const double quant_var = alpha * beta * receive_power;

    QuantizedObservation obs;
    obs.channel_noise_var = channel_noise_var;
    obs.quant_noise_var = quant_var;
    obs.effective_noise_var = alpha * alpha * channel_noise_var + quant_var;
    obs.alpha = alpha;

    const Eigen::Index n = r_clean.size();
    obs.samples.resize(n);
    const double noise_amp = std::sqrt(channel_noise_var);
    for (Eigen::Index i = 0; i < n; ++i)
        obs.samples(i) = alpha * (r_clean(i) + noise_amp * standard_complex_gaussian(rng));
    if (adc.is_finite()) {
        const double quant_amp = std::sqrt(quant_var);
        for (Eigen::Index i = 0; i < n; ++i)
            obs.samples(i) += quant_amp * standard_complex_gaussian(rng);
    }
    return obs;
}

}  // namespace ipac
