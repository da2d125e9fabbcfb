// SPDX-License-Identifier: Apache-2.0
#include "ipac/downlink.hpp"

#include <cmath>

namespace ipac {

Precoder build_precoder(const CMat& est_downlink_channel) {
    const Eigen::Index rows = est_downlink_channel.rows();
    CMat gram = est_downlink_channel * est_downlink_channel.adjoint();

    Precoder out;
    Eigen::LDLT<CMat> factor(gram);
    double trace = gram.real().trace();
    bool healthy = factor.info() == Eigen::Success &&
                   factor.vectorD().real().minCoeff() > 1e-12 * trace / rows;
    if (!healthy) {
        double ridge = 1e-8 * trace / rows;
        factor.compute(gram + ridge * CMat::Identity(rows, rows));
        out.regularized = true;
    }

    CMat unnormalized = factor.solve(est_downlink_channel).adjoint();
    double fro = unnormalized.norm();
    if (fro <= 0.0) throw std::invalid_argument("build_precoder: zero channel");
    out.gain = std::sqrt(static_cast<double>(rows)) / fro;
    out.weights = out.gain * unnormalized;
    return out;
}

CMat effective_link(const CMat& true_downlink_channel, const Precoder& precoder) {
    return true_downlink_channel * precoder.weights;
}

CVec downlink_transmit(const CMat& effective_channel, const CVec& data, double noise_var,
                       std::mt19937_64& rng) {
    if (data.size() != effective_channel.cols())
        throw std::invalid_argument("downlink_transmit: data length mismatch");
    CVec y = effective_channel * data;
    const double amp = std::sqrt(noise_var);
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += amp * standard_complex_gaussian(rng);
    return y;
}

CVec lmmse_detect(const CVec& y, const CMat& assumed_channel, double noise_var) {
    return LmmseDetector(assumed_channel, noise_var).detect(y);
}

LmmseDetector::LmmseDetector(const CMat& assumed_channel, double noise_var) {
    if (noise_var <= 0.0) throw std::invalid_argument("LmmseDetector: noise variance must be positive");
    const Eigen::Index n = assumed_channel.cols();
    CMat normal = assumed_channel.adjoint() * assumed_channel + noise_var * CMat::Identity(n, n);
    factor_.compute(normal);
    assumed_adjoint_ = assumed_channel.adjoint();
}

CVec LmmseDetector::detect(const CVec& y) const {
    return factor_.solve(assumed_adjoint_ * y);
}

CVec qpsk_modulate(const std::vector<std::uint8_t>& bits) {
    if (bits.size() % 2 != 0) throw std::invalid_argument("qpsk_modulate: need an even bit count");
    CVec symbols(bits.size() / 2);
    for (Eigen::Index i = 0; i < symbols.size(); ++i) {
        double re = bits[2 * i] ? -M_SQRT1_2 : M_SQRT1_2;
        double im = bits[2 * i + 1] ? -M_SQRT1_2 : M_SQRT1_2;
        symbols(i) = cplx(re, im);
    }
    return symbols;
}

std::vector<std::uint8_t> qpsk_hard_demap(const CVec& symbols) {
    std::vector<std::uint8_t> bits(2 * symbols.size());
    for (Eigen::Index i = 0; i < symbols.size(); ++i) {
        bits[2 * i] = symbols(i).real() < 0.0 ? 1 : 0;
        bits[2 * i + 1] = symbols(i).imag() < 0.0 ? 1 : 0;
    }
    return bits;
}

}  // namespace ipac
