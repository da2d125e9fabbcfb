// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "ipac/channel.hpp"
#include "ipac/common.hpp"
#include "ipac/config.hpp"
#include "ipac/otfs.hpp"

namespace ipac {

enum class ParamKind { gain, angle, doppler };

/// Action of the channel derivative with respect to one path parameter on the
/// transmit frame s. For ParamKind::gain this is the gain-independent atom
/// (derivative with respect to the complex gain); angle and Doppler carry the
/// path gain as a factor.
CVec channel_derivative_action(const PathSet& paths, int path_idx, ParamKind kind, const CVec& s,
                               int num_subcarriers, int num_timeslots, int num_antennas);

/// Fisher information over the real parameter stack
///   [Re h_0, Im h_0, ..., Re h_{P-1}, Im h_{P-1}, theta_0.., doppler_0..]
/// of size 4P. Index helpers below fix the layout.
struct FimResult {
    Eigen::MatrixXd info;             // 4P x 4P
    Eigen::VectorXd crlb_diag;        // diagonal of the inverse, same ordering
    std::vector<double> crlb_gain;    // per path, Re + Im variances combined
    std::vector<double> crlb_aoa;     // per path, rad^2
    std::vector<double> crlb_doppler; // per path, Doppler bins squared
    bool singular = false;

    static int re_gain_index(int p) { return 2 * p; }
    static int im_gain_index(int p) { return 2 * p + 1; }
    static int angle_index(int p, int num_paths) { return 2 * num_paths + p; }
    static int doppler_index(int p, int num_paths) { return 3 * num_paths + p; }
};

/// Gaussian FIM with the quantizer-scaled mean and the effective noise
/// diagonal: info(i,j) = 2 Re{ mu_i^H Sigma^{-1} mu_j }, mu_i = alpha dH/dI_i s.
/// Throws if any diagonal entry of Sigma is non-positive.
FimResult fisher_matrix(const PathSet& paths, const FrameConfig& cfg, const DdGrid& pilot,
                        const RVec& sigma_diag, double alpha);

/// Convenience overload for the scalar-diagonal noise model.
FimResult fisher_matrix(const PathSet& paths, const FrameConfig& cfg, const DdGrid& pilot,
                        double sigma_scalar, double alpha);

/// Tangential position bound: propagates the marginal LoS-angle variance
/// through the bearing Jacobian. Returns +inf when the angle row carries no
/// information; throws when the geometry makes the Jacobian singular.
double position_crlb(const FimResult& fim, const Geometry& geom);

}  // namespace ipac
