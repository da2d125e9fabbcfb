// SPDX-License-Identifier: Apache-2.0
#include "ipac/crlb.hpp"

#include <cmath>
#include <limits>

namespace ipac {

namespace {

// Pi^l D Delta^nu s with D = diag{j 2 pi q / (MN)} applied at the pre-shift index.
CVec delay_doppler_rate_shift(const CVec& s, int delay_bin, double doppler) {
    const int n = static_cast<int>(s.size());
    CVec out(n);
    const double step = 2.0 * kPi * doppler / n;
    for (int q = 0; q < n; ++q) {
        int src = q - delay_bin;
        if (src < 0) src += n;
        double phase = step * src;
        cplx rotated = s(src) * cplx(std::cos(phase), std::sin(phase));
        out(q) = cplx(0.0, 2.0 * kPi * src / n) * rotated;
    }
    return out;
}

}  // namespace

CVec channel_derivative_action(const PathSet& paths, int path_idx, ParamKind kind, const CVec& s,
                               int num_subcarriers, int num_timeslots, int num_antennas) {
    if (path_idx < 0 || path_idx >= paths.size())
        throw std::invalid_argument("channel_derivative_action: path index out of range");
    const Path& p = paths.paths[path_idx];
    const int frame = num_subcarriers * num_timeslots;
    if (s.size() != frame) throw std::invalid_argument("channel_derivative_action: length mismatch");

    CVec a = steering_vector(p.aoa_rad, num_antennas);
    CVec inner;
    CVec weights(num_antennas);
    switch (kind) {
        case ParamKind::gain:
            inner = delay_doppler_shift(s, p.delay_bin, p.doppler_total());
            weights = a;
            break;
        case ParamKind::angle: {
            inner = delay_doppler_shift(s, p.delay_bin, p.doppler_total());
            double slope = kPi * std::cos(p.aoa_rad);
            for (int n = 0; n < num_antennas; ++n) weights(n) = p.gain * cplx(0.0, slope * n) * a(n);
            break;
        }
        case ParamKind::doppler:
            inner = delay_doppler_rate_shift(s, p.delay_bin, p.doppler_total());
            weights = p.gain * a;
            break;
        default:
            throw std::invalid_argument("channel_derivative_action: unknown parameter kind");
    }

    CVec out(static_cast<Eigen::Index>(frame) * num_antennas);
    for (int n = 0; n < num_antennas; ++n)
        out.segment(static_cast<Eigen::Index>(n) * frame, frame) = weights(n) * inner;
    return out;
}

FimResult fisher_matrix(const PathSet& paths, const FrameConfig& cfg, const DdGrid& pilot,
                        const RVec& sigma_diag, double alpha) {
    const int num_paths = paths.size();
    const int dim = 4 * num_paths;
    const int frame = cfg.grid_size();
    const Eigen::Index obs = static_cast<Eigen::Index>(frame) * cfg.num_rx_antennas;
    if (sigma_diag.size() != obs) throw std::invalid_argument("fisher_matrix: Sigma length mismatch");
    if ((sigma_diag.array() <= 0.0).any()) throw std::invalid_argument("fisher_matrix: singular Sigma");

    CVec s = otfs_modulate(pilot);

    std::vector<CVec> mu(dim);
    for (int p = 0; p < num_paths; ++p) {
        CVec atom = channel_derivative_action(paths, p, ParamKind::gain, s, cfg.num_subcarriers,
                                              cfg.num_timeslots, cfg.num_rx_antennas);
        mu[FimResult::re_gain_index(p)] = alpha * atom;
        mu[FimResult::im_gain_index(p)] = cplx(0.0, alpha) * atom;
        mu[FimResult::angle_index(p, num_paths)] =
            alpha * channel_derivative_action(paths, p, ParamKind::angle, s, cfg.num_subcarriers,
                                              cfg.num_timeslots, cfg.num_rx_antennas);
        mu[FimResult::doppler_index(p, num_paths)] =
            alpha * channel_derivative_action(paths, p, ParamKind::doppler, s, cfg.num_subcarriers,
                                              cfg.num_timeslots, cfg.num_rx_antennas);
    }

    FimResult fim;
    fim.info.resize(dim, dim);
    RVec inv_sigma = sigma_diag.cwiseInverse();
    std::vector<CVec> weighted(dim);
    for (int i = 0; i < dim; ++i) weighted[i] = mu[i].cwiseProduct(inv_sigma.cast<cplx>());
    for (int i = 0; i < dim; ++i) {
        for (int j = i; j < dim; ++j) {
            double v = 2.0 * mu[i].dot(weighted[j]).real();  // dot conjugates the left argument
            fim.info(i, j) = v;
            fim.info(j, i) = v;
        }
    }

    // Eigendecomposition gives the inverse and a rank check in one pass.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(fim.info);
    const Eigen::VectorXd& vals = eig.eigenvalues();
    double largest = std::max(vals.cwiseAbs().maxCoeff(), 1e-300);
    double tol = 1e-12 * largest;
    fim.crlb_diag.resize(dim);
    if ((vals.array() < tol).any()) {
        fim.singular = true;
        fim.crlb_diag.setConstant(std::numeric_limits<double>::infinity());
    } else {
        Eigen::MatrixXd inv = eig.eigenvectors() * vals.cwiseInverse().asDiagonal() *
                              eig.eigenvectors().transpose();
        fim.crlb_diag = inv.diagonal();
    }

    fim.crlb_gain.resize(num_paths);
    fim.crlb_aoa.resize(num_paths);
    fim.crlb_doppler.resize(num_paths);
    for (int p = 0; p < num_paths; ++p) {
        fim.crlb_gain[p] = fim.crlb_diag(FimResult::re_gain_index(p)) +
                           fim.crlb_diag(FimResult::im_gain_index(p));
        fim.crlb_aoa[p] = fim.crlb_diag(FimResult::angle_index(p, num_paths));
        fim.crlb_doppler[p] = fim.crlb_diag(FimResult::doppler_index(p, num_paths));
    }
    return fim;
}

FimResult fisher_matrix(const PathSet& paths, const FrameConfig& cfg, const DdGrid& pilot,
                        double sigma_scalar, double alpha) {
    RVec diag = RVec::Constant(static_cast<Eigen::Index>(cfg.grid_size()) * cfg.num_rx_antennas,
                               sigma_scalar);
    return fisher_matrix(paths, cfg, pilot, diag, alpha);
}

double position_crlb(const FimResult& fim, const Geometry& geom) {
    const int dim = static_cast<int>(fim.info.rows());
    const int num_paths = dim / 4;
    const int idx = FimResult::angle_index(0, num_paths);

    double row_scale = fim.info.row(idx).cwiseAbs().maxCoeff();
    double mat_scale = fim.info.cwiseAbs().maxCoeff();
    if (row_scale <= 1e-14 * std::max(mat_scale, 1.0))
        return std::numeric_limits<double>::infinity();
    if (fim.singular) return std::numeric_limits<double>::infinity();

    double d = geom.range_m();
    if (d <= 0.0) throw std::domain_error("position_crlb: zero-range geometry");
    Eigen::Vector2d eta = geom.user_m / d;
    Eigen::Vector2d z(0.0, 1.0);
    double dot = eta.dot(z);
    double denom = 1.0 - dot * dot;
    if (denom <= 1e-12) throw std::domain_error("position_crlb: singular geometry (user on the reference axis)");
    Eigen::RowVector2d jac = z.transpose() * (Eigen::Matrix2d::Identity() - eta * eta.transpose());
    jac /= d * std::sqrt(denom);

    // Rank-one position information: variance along the excited direction.
    return fim.crlb_diag(idx) / jac.squaredNorm();
}

}  // namespace ipac
