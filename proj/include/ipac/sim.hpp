// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ipac/channel.hpp"
#include "ipac/common.hpp"
#include "ipac/config.hpp"
#include "ipac/estimator.hpp"

namespace ipac {

struct TrialOptions {
    bool estimate = true;
    bool crlb = true;
    bool downlink = true;
};

struct TrialMetrics {
    double position_sq_err = 0.0;  // m^2, against the delay-grid-consistent position
    double aoa_sq_err = 0.0;       // rad^2, LoS path
    double doppler_mse = 0.0;      // bins^2, mean over paths
    double gain_mse = 0.0;         // mean |gain error|^2 over paths
    double crlb_position = 0.0;    // m^2
    double crlb_aoa = 0.0;         // rad^2, LoS path
    double crlb_doppler = 0.0;     // bins^2, mean over paths
    double crlb_gain = 0.0;        // mean over paths
    long bits_sent = 0;
    long bit_errors = 0;
    bool music_complete = true;
};

/// Optional per-stage capture for debugging dumps.
struct TrialDebug {
    PathSet truth;
    std::vector<double> music_peaks_rad;
    std::vector<PathEstimate> estimates;
    Eigen::Vector2d position_estimate{0, 0};
    Eigen::Vector2d position_truth{0, 0};
    double channel_noise_var = 0.0;
    double effective_noise_var = 0.0;
    double alpha = 1.0;
    double precoder_gain = 0.0;
};

/// One uplink-positioning + CRLB + downlink-communication trial. All
/// randomness derives from (cfg.seed, snr_index, trial_index) substreams that
/// do not depend on the ADC resolution, so sweeps over bit depths reuse
/// common random numbers and results are independent of worker scheduling.
TrialMetrics run_trial(const FrameConfig& cfg, double snr_db, int snr_index, int trial_index,
                       const TrialOptions& opts = {}, TrialDebug* debug = nullptr);

struct SweepSpec {
    std::vector<double> snr_db;
    std::vector<AdcResolution> bits = {AdcResolution::finite(3), AdcResolution::finite(4),
                                       AdcResolution::finite(5), AdcResolution::infinite()};
    int trials = 500;
    std::vector<std::string> metrics = {"position_mse", "aoa_mse",      "doppler_mse",
                                        "gain_mse",     "crlb_position", "crlb_aoa",
                                        "crlb_doppler", "crlb_gain",     "ber"};
    std::uint64_t seed = 1;
    int workers = 0;          // 0: OTFS_IPAC_WORKERS env or hardware concurrency
    std::string dump_path;    // when set, one JSON line per trial lands here
};

struct ResultRow {
    double snr_db = 0.0;
    AdcResolution bits;
    std::string metric;
    double value = 0.0;
    int trials = 0;
    std::uint64_t seed = 0;
};

/// Runs trials over the snr x bits grid on a worker pool and aggregates:
/// MSE rows are trial means of squared errors, CRLB rows are trial means of
/// the per-trial bounds, the BER row pools bit errors over all trial frames.
std::vector<ResultRow> run_sweep(const SweepSpec& spec, const FrameConfig& cfg);

void write_csv(std::ostream& os, const std::vector<ResultRow>& rows, const FrameConfig& cfg,
               const SweepSpec& spec);
void write_csv_file(const std::string& path, const std::vector<ResultRow>& rows,
                    const FrameConfig& cfg, const SweepSpec& spec);

int resolve_worker_count(int requested);

/// FNV-1a hash of the canonical config text (stamped into CSV metadata).
std::uint64_t config_hash(const FrameConfig& cfg);

}  // namespace ipac
