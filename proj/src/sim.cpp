// SPDX-License-Identifier: Apache-2.0
#include "ipac/sim.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "ipac/adc.hpp"
#include "ipac/crlb.hpp"
#include "ipac/downlink.hpp"
#include "ipac/otfs.hpp"

namespace ipac {

namespace {

// Substream tags; none of them depend on the ADC resolution.
constexpr std::uint64_t kStreamChannel = 0x01;
constexpr std::uint64_t kStreamFrontend = 0x02;
constexpr std::uint64_t kStreamData = 0x03;
constexpr std::uint64_t kStreamDownlinkNoise = 0x04;

PathSet estimates_to_paths(const std::vector<PathEstimate>& est) {
    PathSet set;
    set.paths.resize(est.size());
    for (size_t p = 0; p < est.size(); ++p) {
        set.paths[p].gain = est[p].gain;
        set.paths[p].delay_bin = static_cast<int>(p) + 1;
        set.paths[p].doppler_bin = est[p].doppler_bin;
        set.paths[p].doppler_frac = est[p].doppler_frac;
        set.paths[p].aoa_rad = est[p].aoa_rad;
    }
    return set;
}

}  // namespace

TrialMetrics run_trial(const FrameConfig& cfg, double snr_db, int snr_index, int trial_index,
                       const TrialOptions& opts, TrialDebug* debug) {
    const int m = cfg.num_subcarriers;
    const int n = cfg.num_timeslots;
    const int frame = cfg.grid_size();
    TrialMetrics out;
    try {
        Geometry geom = effective_geometry(cfg);

        auto rng_channel = make_rng(cfg.seed, {kStreamChannel, static_cast<std::uint64_t>(snr_index),
                                               static_cast<std::uint64_t>(trial_index)});
        PathSet paths = sample_paths(cfg, geom, rng_channel);
        DdGrid pilot = generate_pilot_grid(m, n, rng_channel);

        ChannelOperator channel(paths, m, n, cfg.num_rx_antennas);
        CVec transmit = otfs_modulate(pilot);
        CVec receive_clean = channel.apply(transmit);

        // Receive SNR per antenna: noise scaled against the realized path power.
        const double signal_power = paths.total_gain_power();
        const double noise_var = signal_power * db_to_linear(-snr_db);

        auto rng_frontend = make_rng(cfg.seed, {kStreamFrontend, static_cast<std::uint64_t>(snr_index),
                                                static_cast<std::uint64_t>(trial_index)});
        QuantizedObservation obs = quantize(receive_clean, paths, noise_var, cfg.adc, rng_frontend);

        std::vector<PathEstimate> estimates;
        const bool need_estimate = opts.estimate || opts.downlink;
        if (need_estimate) {
            Eigen::Map<const CMat> by_antenna(obs.samples.data(), frame, cfg.num_rx_antennas);
            SmoothedCovariance cov = smoothed_covariance(by_antenna.transpose(), cfg.subarray_length);
            MusicSpectrum spectrum = music_aoa(cov, cfg.num_paths, cfg.music_grid_deg * kPi / 180.0);
            out.music_complete = spectrum.complete;

            CVec y_dd = otfs_demodulate(obs.samples, m, n, cfg.num_rx_antennas);
            estimates = estimate_paths(y_dd, pilot, spectrum.peak_angles, cfg, obs.alpha);

            Eigen::Vector2d fix = position_fix(estimates[0].aoa_rad, cfg.delay_bin_seconds(1));
            out.position_sq_err = (fix - geom.user_m).squaredNorm();
            double aoa_err = estimates[0].aoa_rad - paths.paths[0].aoa_rad;
            out.aoa_sq_err = aoa_err * aoa_err;
            double dop = 0.0, gain = 0.0;
            for (int p = 0; p < cfg.num_paths; ++p) {
                double de = estimates[p].doppler_total() - paths.paths[p].doppler_total();
                dop += de * de;
                gain += std::norm(estimates[p].gain - paths.paths[p].gain);
            }
            out.doppler_mse = dop / cfg.num_paths;
            out.gain_mse = gain / cfg.num_paths;

            if (debug) {
                debug->truth = paths;
                debug->music_peaks_rad = spectrum.peak_angles;
                debug->estimates = estimates;
                debug->position_estimate = fix;
                debug->position_truth = geom.user_m;
                debug->channel_noise_var = noise_var;
                debug->effective_noise_var = obs.effective_noise_var;
                debug->alpha = obs.alpha;
            }
        }

        if (opts.crlb) {
            FimResult fim = fisher_matrix(paths, cfg, pilot, obs.effective_noise_var, obs.alpha);
            out.crlb_position = position_crlb(fim, geom);
            out.crlb_aoa = fim.crlb_aoa[0];
            double dop = 0.0, gain = 0.0;
            for (int p = 0; p < cfg.num_paths; ++p) {
                dop += fim.crlb_doppler[p];
                gain += fim.crlb_gain[p];
            }
            out.crlb_doppler = dop / cfg.num_paths;
            out.crlb_gain = gain / cfg.num_paths;
        }

        if (opts.downlink) {
            ChannelOperator true_dl(paths, m, n, cfg.num_tx_antennas);
            CMat g_down = effective_dd_channel(true_dl, LinkDirection::downlink);
            ChannelOperator est_dl(estimates_to_paths(estimates), m, n, cfg.num_tx_antennas);
            CMat g_down_est = effective_dd_channel(est_dl, LinkDirection::downlink);

            Precoder precoder = build_precoder(g_down_est);
            CMat g_eff = effective_link(g_down, precoder);

            // Downlink SNR is transmit-referenced: the path profile is
            // normalized to unit total power and the precoder to frame power,
            // so the per-sample noise floor follows the axis directly and the
            // precoding gain fluctuates with the channel draw.
            const double dl_noise = db_to_linear(-snr_db);
            CMat assumed = precoder.gain * CMat::Identity(frame, frame);
            LmmseDetector detector(assumed, dl_noise);
            if (debug) debug->precoder_gain = precoder.gain;

            auto rng_data = make_rng(cfg.seed, {kStreamData, static_cast<std::uint64_t>(snr_index),
                                                static_cast<std::uint64_t>(trial_index)});
            auto rng_dl = make_rng(cfg.seed, {kStreamDownlinkNoise, static_cast<std::uint64_t>(snr_index),
                                              static_cast<std::uint64_t>(trial_index)});
            std::uniform_int_distribution<int> coin(0, 1);
            std::vector<std::uint8_t> bits(2 * frame);
            for (int f = 0; f < cfg.data_frames_per_trial; ++f) {
                for (auto& b : bits) b = static_cast<std::uint8_t>(coin(rng_data));
                CVec x = qpsk_modulate(bits);
                CVec y = downlink_transmit(g_eff, x, dl_noise, rng_dl);
                std::vector<std::uint8_t> decoded = qpsk_hard_demap(detector.detect(y));
                for (size_t i = 0; i < bits.size(); ++i)
                    if (bits[i] != decoded[i]) ++out.bit_errors;
                out.bits_sent += static_cast<long>(bits.size());
            }
        }
    } catch (const std::exception& e) {
        std::ostringstream msg;
        msg << "trial failed (snr=" << snr_db << " dB, bits=" << cfg.adc.str()
            << ", trial=" << trial_index << "): " << e.what();
        throw std::runtime_error(msg.str());
    }
    return out;
}

int resolve_worker_count(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("OTFS_IPAC_WORKERS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

std::vector<ResultRow> run_sweep(const SweepSpec& spec, const FrameConfig& cfg) {
    if (spec.metrics.empty()) throw std::invalid_argument("run_sweep: no metrics selected");
    if (spec.snr_db.empty()) throw std::invalid_argument("run_sweep: empty SNR list");
    if (spec.trials < 1) throw std::invalid_argument("run_sweep: trials must be >= 1");
    ValidationReport rep = validate(cfg);
    if (!rep.ok()) throw std::invalid_argument("run_sweep: invalid config: " + rep.errors.front());

    auto wants = [&spec](const std::string& name) {
        return std::find(spec.metrics.begin(), spec.metrics.end(), name) != spec.metrics.end();
    };
    for (const auto& name : spec.metrics) {
        static const std::vector<std::string> known = {
            "position_mse", "aoa_mse", "doppler_mse", "gain_mse", "crlb_position",
            "crlb_aoa", "crlb_doppler", "crlb_gain", "ber"};
        if (std::find(known.begin(), known.end(), name) == known.end())
            throw std::invalid_argument("run_sweep: unknown metric '" + name + "'");
    }

    TrialOptions opts;
    opts.downlink = wants("ber");
    opts.crlb = wants("crlb_position") || wants("crlb_aoa") || wants("crlb_doppler") || wants("crlb_gain");
    opts.estimate = opts.downlink || wants("position_mse") || wants("aoa_mse") ||
                    wants("doppler_mse") || wants("gain_mse");

    struct Cell { double snr; int snr_index; AdcResolution bits; };
    std::vector<Cell> cells;
    for (size_t si = 0; si < spec.snr_db.size(); ++si)
        for (const auto& b : spec.bits) cells.push_back({spec.snr_db[si], static_cast<int>(si), b});

    const long total = static_cast<long>(cells.size()) * spec.trials;
    std::vector<TrialMetrics> results(total);
    std::atomic<long> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;

    auto worker = [&]() {
        for (long task = next.fetch_add(1); task < total; task = next.fetch_add(1)) {
            if (first_error) return;
            const Cell& cell = cells[task / spec.trials];
            int trial = static_cast<int>(task % spec.trials);
            FrameConfig trial_cfg = cfg;
            trial_cfg.adc = cell.bits;
            trial_cfg.seed = spec.seed;
            try {
                results[task] = run_trial(trial_cfg, cell.snr, cell.snr_index, trial, opts);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    int workers = std::min<long>(resolve_worker_count(spec.workers), total);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);

    if (!spec.dump_path.empty()) {
        std::ofstream dump(spec.dump_path);
        if (!dump) throw std::runtime_error("run_sweep: cannot open dump file '" + spec.dump_path + "'");
        dump.precision(12);
        for (long task = 0; task < total; ++task) {
            const Cell& cell = cells[task / spec.trials];
            const TrialMetrics& m = results[task];
            dump << "{\"snr_db\":" << cell.snr << ",\"bits\":\"" << cell.bits.str()
                 << "\",\"trial\":" << (task % spec.trials)
                 << ",\"position_sq_err\":" << m.position_sq_err
                 << ",\"aoa_sq_err\":" << m.aoa_sq_err
                 << ",\"doppler_mse\":" << m.doppler_mse
                 << ",\"gain_mse\":" << m.gain_mse
                 << ",\"crlb_position\":" << m.crlb_position
                 << ",\"crlb_aoa\":" << m.crlb_aoa
                 << ",\"crlb_doppler\":" << m.crlb_doppler
                 << ",\"crlb_gain\":" << m.crlb_gain
                 << ",\"bit_errors\":" << m.bit_errors
                 << ",\"bits_sent\":" << m.bits_sent
                 << ",\"music_complete\":" << (m.music_complete ? "true" : "false") << "}\n";
        }
    }

    std::vector<ResultRow> rows;
    for (size_t c = 0; c < cells.size(); ++c) {
        const auto* cell_results = results.data() + c * spec.trials;
        auto mean_of = [&](double TrialMetrics::*field) {
            double acc = 0.0;
            for (int t = 0; t < spec.trials; ++t) acc += cell_results[t].*field;
            return acc / spec.trials;
        };
        long bits_sent = 0, bit_errors = 0;
        for (int t = 0; t < spec.trials; ++t) {
            bits_sent += cell_results[t].bits_sent;
            bit_errors += cell_results[t].bit_errors;
        }

        for (const auto& name : spec.metrics) {
            double value = 0.0;
            if (name == "position_mse") value = mean_of(&TrialMetrics::position_sq_err);
            else if (name == "aoa_mse") value = mean_of(&TrialMetrics::aoa_sq_err);
            else if (name == "doppler_mse") value = mean_of(&TrialMetrics::doppler_mse);
            else if (name == "gain_mse") value = mean_of(&TrialMetrics::gain_mse);
            else if (name == "crlb_position") value = mean_of(&TrialMetrics::crlb_position);
            else if (name == "crlb_aoa") value = mean_of(&TrialMetrics::crlb_aoa);
            else if (name == "crlb_doppler") value = mean_of(&TrialMetrics::crlb_doppler);
            else if (name == "crlb_gain") value = mean_of(&TrialMetrics::crlb_gain);
            else if (name == "ber") value = bits_sent ? static_cast<double>(bit_errors) / bits_sent : 0.0;
            rows.push_back({cells[c].snr, cells[c].bits, name, value, spec.trials, spec.seed});
        }
    }
    return rows;
}

std::uint64_t config_hash(const FrameConfig& cfg) {
    std::string text = config_to_text(cfg);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

void write_csv(std::ostream& os, const std::vector<ResultRow>& rows, const FrameConfig& cfg,
               const SweepSpec& spec) {
    std::time_t now = std::time(nullptr);
    char stamp[64];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));

    os << "# otfs-ipac sweep v0.1.0\n";
    os << "# generated_at: " << stamp << "\n";
    char hashbuf[32];
    std::snprintf(hashbuf, sizeof(hashbuf), "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    os << "# config_hash: " << hashbuf << "\n";
    os << "# master_seed: " << spec.seed << "\n";
    os << "# trials_per_point: " << spec.trials << "\n";
    os << "# snr_convention: uplink receive SNR per antenna (noise scaled to realized path power);"
          " downlink noise referenced to the nominal post-precoding symbol power\n";
    os << "snr_db,bits,metric,value,trials,seed\n";
    os.precision(12);
    for (const auto& r : rows)
        os << r.snr_db << "," << r.bits.str() << "," << r.metric << "," << r.value << ","
           << r.trials << "," << r.seed << "\n";
}

void write_csv_file(const std::string& path, const std::vector<ResultRow>& rows,
                    const FrameConfig& cfg, const SweepSpec& spec) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_csv_file: cannot open '" + path + "'");
    write_csv(f, rows, cfg, spec);
}

}  // namespace ipac
