// SPDX-License-Identifier: Apache-2.0
#include "ipac/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ipac {

SmoothedCovariance smoothed_covariance(const CMat& antenna_snapshots, int subarray_length) {
    const int num_antennas = static_cast<int>(antenna_snapshots.rows());
    const int snapshots = static_cast<int>(antenna_snapshots.cols());
    if (subarray_length < 1 || subarray_length > num_antennas)
        throw std::invalid_argument("smoothed_covariance: subarray length out of range");
    if (snapshots < subarray_length)
        throw std::invalid_argument("smoothed_covariance: insufficient snapshots");

    const int count = num_antennas - subarray_length + 1;
    CMat acc = CMat::Zero(subarray_length, subarray_length);
    for (int k = 0; k < count; ++k) {
        auto block = antenna_snapshots.middleRows(k, subarray_length);
        acc.noalias() += block * block.adjoint();
    }
    acc /= static_cast<double>(count) * snapshots;

    SmoothedCovariance out;
    out.cov = 0.5 * (acc + acc.adjoint());
    out.subarray_count = count;
    out.snapshots = snapshots;
    return out;
}

MusicSpectrum music_aoa(const SmoothedCovariance& cov, int num_sources, double grid_step_rad) {
    const int dim = static_cast<int>(cov.cov.rows());
    if (num_sources < 1) throw std::invalid_argument("music_aoa: need at least one source");
    if (num_sources >= dim) throw std::invalid_argument("music_aoa: sources must be fewer than the subarray length");
    if (grid_step_rad <= 0) throw std::invalid_argument("music_aoa: grid step must be positive");

    Eigen::SelfAdjointEigenSolver<CMat> eig(cov.cov);
    CMat noise_basis = eig.eigenvectors().leftCols(dim - num_sources);

    MusicSpectrum spec;
    const int points = static_cast<int>(std::floor(kPi / grid_step_rad)) + 1;
    spec.grid_rad.reserve(points);
    spec.power.reserve(points);
    for (int i = 0; i < points; ++i) {
        double theta = -kPi / 2 + i * grid_step_rad;
        if (theta > kPi / 2) theta = kPi / 2;
        CVec a = steering_vector(theta, dim);
        double denom = (noise_basis.adjoint() * a).squaredNorm();
        spec.grid_rad.push_back(theta);
        spec.power.push_back(1.0 / std::max(denom, 1e-300));
    }

    // Local maxima, refined by a three-point parabola on the log spectrum.
    struct Peak { double angle; double value; int index; };
    std::vector<Peak> peaks;
    const int n = static_cast<int>(spec.power.size());
    for (int i = 1; i + 1 < n; ++i) {
        if (spec.power[i] > spec.power[i - 1] && spec.power[i] >= spec.power[i + 1]) {
            double l = std::log10(spec.power[i - 1]);
            double c = std::log10(spec.power[i]);
            double r = std::log10(spec.power[i + 1]);
            double curv = l - 2 * c + r;
            double offset = (curv < -1e-12) ? 0.5 * (l - r) / curv : 0.0;
            offset = std::clamp(offset, -0.5, 0.5);
            peaks.push_back({spec.grid_rad[i] + offset * grid_step_rad, spec.power[i], i});
        }
    }
    std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.value > b.value; });
    if (static_cast<int>(peaks.size()) > num_sources) peaks.resize(num_sources);

    spec.complete = static_cast<int>(peaks.size()) == num_sources;
    if (!spec.complete) {
        // Pad from the best remaining grid points so the estimator always has
        // a full candidate pool; keep clear of already selected peaks.
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&spec](int a, int b) { return spec.power[a] > spec.power[b]; });
        for (int idx : order) {
            if (static_cast<int>(peaks.size()) >= num_sources) break;
            bool clear = true;
            for (const auto& p : peaks)
                if (std::abs(idx - p.index) <= 2) { clear = false; break; }
            if (clear) peaks.push_back({spec.grid_rad[idx], spec.power[idx], idx});
        }
    }

    for (const auto& p : peaks) spec.peak_angles.push_back(p.angle);
    return spec;
}

namespace {

// Golden-section maximization on [lo, hi]; returns the midpoint of the final bracket.
template <typename F>
double golden_section_max(F&& f, double lo, double hi, double tol) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

namespace {

// Shared state for the cancellation passes below.
struct CancellationWork {
    const FrameConfig& cfg;
    CVec s;                          // time-domain pilot
    double atom_energy;              // ||Gamma x||^2, constant over angle and Doppler
    std::vector<CVec> steering;      // per candidate
    std::vector<std::vector<CVec>> integer_atoms;  // [path][k + N/2]

    CVec atom(int delay, double doppler) const {
        return dd_from_time(delay_doppler_shift(s, delay, doppler), cfg.num_subcarriers,
                            cfg.num_timeslots);
    }
};

CVec beamform(const CVec& residual, const CVec& a, int frame) {
    const int num_rx = static_cast<int>(a.size());
    CVec u = CVec::Zero(frame);
    for (int ant = 0; ant < num_rx; ++ant)
        u += std::conj(a(ant)) * residual.segment(static_cast<Eigen::Index>(ant) * frame, frame);
    return u;
}

void subtract_component(CVec& residual, const CVec& a, const CVec& g, cplx weight, int frame) {
    const int num_rx = static_cast<int>(a.size());
    for (int ant = 0; ant < num_rx; ++ant)
        residual.segment(static_cast<Eigen::Index>(ant) * frame, frame) -= (weight * a(ant)) * g;
}

// Integer-Doppler cancellation under a fixed candidate-to-delay assignment;
// returns the final residual energy. Cheap enough to score every assignment.
double score_assignment(const CancellationWork& work, const CVec& y_dd,
                        const std::vector<int>& assignment, double alpha) {
    const int frame = work.cfg.grid_size();
    const int n = work.cfg.num_timeslots;
    CVec residual = y_dd;
    for (int p = 0; p < work.cfg.num_paths; ++p) {
        const CVec& a = work.steering[assignment[p]];
        CVec beam = beamform(residual, a, frame);
        int best_k = 0;
        double best_metric = -1.0;
        for (int k = -n / 2; k <= n / 2 - 1; ++k) {
            double metric = std::norm(work.integer_atoms[p][k + n / 2].dot(beam));
            if (metric > best_metric) {
                best_metric = metric;
                best_k = k;
            }
        }
        const CVec& g = work.integer_atoms[p][best_k + n / 2];
        cplx gain = g.dot(beam) / (alpha * work.atom_energy);
        subtract_component(residual, a, g, alpha * gain, frame);
    }
    return residual.squaredNorm();
}

void enumerate_assignments(int num_paths, int num_candidates, std::vector<int>& current,
                           std::vector<bool>& taken, std::vector<std::vector<int>>& out) {
    if (static_cast<int>(current.size()) == num_paths) {
        out.push_back(current);
        return;
    }
    for (int c = 0; c < num_candidates; ++c) {
        if (taken[c]) continue;
        taken[c] = true;
        current.push_back(c);
        enumerate_assignments(num_paths, num_candidates, current, taken, out);
        current.pop_back();
        taken[c] = false;
    }
}

}  // namespace

std::vector<PathEstimate> estimate_paths(const CVec& y_dd, const DdGrid& pilot,
                                         const std::vector<double>& aoa_candidates,
                                         const FrameConfig& cfg, double alpha) {
    if (aoa_candidates.empty()) throw std::invalid_argument("estimate_paths: empty candidate list");
    if (static_cast<int>(aoa_candidates.size()) < cfg.num_paths)
        throw std::runtime_error("estimate_paths: all angle candidates consumed");
    const int m = cfg.num_subcarriers;
    const int n = cfg.num_timeslots;
    const int frame = m * n;
    const int num_rx = cfg.num_rx_antennas;
    if (y_dd.size() != static_cast<Eigen::Index>(frame) * num_rx)
        throw std::invalid_argument("estimate_paths: observation length mismatch");

    CancellationWork work{cfg, otfs_modulate(pilot), 0.0, {}, {}};
    work.atom_energy = num_rx * work.s.squaredNorm();  // steering elements are unit modulus
    work.steering.resize(aoa_candidates.size());
    for (size_t c = 0; c < aoa_candidates.size(); ++c)
        work.steering[c] = steering_vector(aoa_candidates[c], num_rx);
    work.integer_atoms.resize(cfg.num_paths);
    for (int p = 0; p < cfg.num_paths; ++p) {
        work.integer_atoms[p].resize(n);
        for (int k = -n / 2; k <= n / 2 - 1; ++k)
            work.integer_atoms[p][k + n / 2] = work.atom(p + 1, k);
    }

    // The candidate-to-delay pairing is resolved globally: every assignment is
    // scored by the residual left after a full integer-Doppler cancellation
    // pass, which separates true pairings from cross-delay leakage even when a
    // path gain is deeply faded. Falls back to greedy in-pass selection when
    // the assignment count gets out of hand.
    std::vector<int> assignment;
    const double max_assignments = 5040;
    double combinations = 1;
    for (int p = 0; p < cfg.num_paths; ++p) combinations *= static_cast<double>(aoa_candidates.size() - p);
    if (combinations <= max_assignments) {
        std::vector<std::vector<int>> all;
        std::vector<int> current;
        std::vector<bool> taken(aoa_candidates.size(), false);
        enumerate_assignments(cfg.num_paths, static_cast<int>(aoa_candidates.size()), current,
                              taken, all);
        double best_score = std::numeric_limits<double>::infinity();
        for (const auto& cand : all) {
            double score = score_assignment(work, y_dd, cand, alpha);
            if (score < best_score) {
                best_score = score;
                assignment = cand;
            }
        }
    }

    CVec residual = y_dd;
    std::vector<bool> used(aoa_candidates.size(), false);
    std::vector<PathEstimate> estimates;
    std::vector<CVec> kept_atoms;  // full-size atoms, for the optional joint refit
    for (int p = 0; p < cfg.num_paths; ++p) {
        const int delay = p + 1;

        int best_c = -1;
        int best_k = 0;
        double best_metric = -1.0;
        if (!assignment.empty()) {
            best_c = assignment[p];
            CVec beam = beamform(residual, work.steering[best_c], frame);
            for (int k = -n / 2; k <= n / 2 - 1; ++k) {
                double metric = std::norm(work.integer_atoms[p][k + n / 2].dot(beam));
                if (metric > best_metric) {
                    best_metric = metric;
                    best_k = k;
                }
            }
        } else {
            // Greedy joint pick over unused candidates and the Doppler grid.
            for (size_t c = 0; c < aoa_candidates.size(); ++c) {
                if (used[c]) continue;
                CVec beam = beamform(residual, work.steering[c], frame);
                for (int k = -n / 2; k <= n / 2 - 1; ++k) {
                    double metric = std::norm(work.integer_atoms[p][k + n / 2].dot(beam));
                    if (metric > best_metric) {
                        best_metric = metric;
                        best_c = static_cast<int>(c);
                        best_k = k;
                    }
                }
            }
        }

        CVec beam = beamform(residual, work.steering[best_c], frame);
        auto metric_at = [&](double doppler) { return std::norm(work.atom(delay, doppler).dot(beam)); };
        double refined = golden_section_max(metric_at, best_k - 0.5, best_k + 0.5,
                                            cfg.doppler_refine_tol);
        // Never let the refinement fall below the integer-grid value.
        if (metric_at(refined) < best_metric) refined = best_k;

        CVec g = work.atom(delay, refined);
        cplx correlation = g.dot(beam);  // (Gamma x)^H residual
        cplx gain = correlation / (alpha * work.atom_energy);

        CVec full_atom(static_cast<Eigen::Index>(frame) * num_rx);
        for (int ant = 0; ant < num_rx; ++ant)
            full_atom.segment(static_cast<Eigen::Index>(ant) * frame, frame) =
                work.steering[best_c](ant) * g;
        residual -= (alpha * gain) * full_atom;
        used[best_c] = true;
        kept_atoms.push_back(std::move(full_atom));

        PathEstimate est;
        est.aoa_rad = aoa_candidates[best_c];
        est.doppler_bin = best_k;
        est.doppler_frac = std::clamp(refined - best_k, -0.5, 0.5);
        est.gain = gain;
        est.residual_energy = residual.squaredNorm();
        estimates.push_back(est);
    }

    if (cfg.joint_gain_refit && !estimates.empty()) {
        const int count = static_cast<int>(estimates.size());
        CMat basis(y_dd.size(), count);
        for (int i = 0; i < count; ++i) basis.col(i) = alpha * kept_atoms[i];
        CVec refit = (basis.adjoint() * basis).ldlt().solve(basis.adjoint() * y_dd);
        for (int i = 0; i < count; ++i) estimates[i].gain = refit(i);
    }
    return estimates;
}

Eigen::Vector2d position_fix(double aoa_rad, double los_delay_s) {
    return position_from_los(los_delay_s, aoa_rad);
}

}  // namespace ipac
