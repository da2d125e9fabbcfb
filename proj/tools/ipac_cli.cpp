// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: scenario validation, CRLB evaluation, single-trial
// debugging, and the full Monte-Carlo sweep over SNR and ADC resolution.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ipac/adc.hpp"
#include "ipac/crlb.hpp"
#include "ipac/otfs.hpp"
#include "ipac/sim.hpp"

using json = nlohmann::json;
using namespace ipac;

namespace {

std::vector<AdcResolution> parse_bits_list(const std::string& text) {
    std::vector<AdcResolution> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(AdcResolution::parse(item));
    }
    if (out.empty()) throw std::invalid_argument("empty bits list");
    return out;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    if (out.empty()) throw std::invalid_argument("empty list");
    return out;
}

FrameConfig load_or_default(const std::string& path) {
    if (path.empty()) return FrameConfig{};
    return load_config_file(path);
}

int cmd_validate(const std::string& config_path) {
    FrameConfig cfg = load_or_default(config_path);
    ValidationReport rep = validate(cfg);
    if (rep.ok()) {
        std::cout << "config valid; subarray_count=" << rep.subarray_count << "\n";
        return 0;
    }
    for (const auto& e : rep.errors) std::cerr << "invalid: " << e << "\n";
    return 1;
}

int cmd_crlb(const std::string& config_path, const std::string& bits, double snr_db, int draws,
             std::uint64_t seed_override, bool seed_given) {
    FrameConfig cfg = load_or_default(config_path);
    if (!bits.empty()) cfg.adc = AdcResolution::parse(bits);
    if (seed_given) cfg.seed = seed_override;
    ValidationReport rep = validate(cfg);
    if (!rep.ok()) {
        std::cerr << "invalid config: " << rep.errors.front() << "\n";
        return 1;
    }

    Geometry geom = effective_geometry(cfg);
    double alpha = alpha_for_bits(cfg.adc);
    double pos = 0, aoa = 0, dop = 0, gain = 0;
    for (int d = 0; d < draws; ++d) {
        auto rng = make_rng(cfg.seed, {0xCB, static_cast<std::uint64_t>(d)});
        PathSet paths = sample_paths(cfg, geom, rng);
        DdGrid pilot = generate_pilot_grid(cfg.num_subcarriers, cfg.num_timeslots, rng);
        double sigma2 = paths.total_gain_power() * db_to_linear(-snr_db);
        double eff = effective_noise_variance(paths, sigma2, cfg.adc);
        FimResult fim = fisher_matrix(paths, cfg, pilot, eff, alpha);
        pos += position_crlb(fim, geom);
        aoa += fim.crlb_aoa[0];
        for (int p = 0; p < cfg.num_paths; ++p) {
            dop += fim.crlb_doppler[p] / cfg.num_paths;
            gain += fim.crlb_gain[p] / cfg.num_paths;
        }
    }
    std::cout << "crlb over " << draws << " channel draws at snr=" << snr_db
              << " dB, bits=" << cfg.adc.str() << "\n";
    std::cout << "  position  " << pos / draws << " m^2\n";
    std::cout << "  aoa       " << aoa / draws << " rad^2\n";
    std::cout << "  doppler   " << dop / draws << " bins^2\n";
    std::cout << "  gain      " << gain / draws << "\n";
    return 0;
}

json path_to_json(const Path& p) {
    return json{{"gain_re", p.gain.real()},       {"gain_im", p.gain.imag()},
                {"delay_bin", p.delay_bin},       {"doppler", p.doppler_total()},
                {"aoa_rad", p.aoa_rad},           {"power_weight", p.power_weight}};
}

int cmd_single_trial(const std::string& config_path, const std::string& bits, double snr_db,
                     int trial, std::uint64_t seed_override, bool seed_given,
                     const std::string& dump_path) {
    FrameConfig cfg = load_or_default(config_path);
    if (!bits.empty()) cfg.adc = AdcResolution::parse(bits);
    if (seed_given) cfg.seed = seed_override;
    ValidationReport rep = validate(cfg);
    if (!rep.ok()) {
        std::cerr << "invalid config: " << rep.errors.front() << "\n";
        return 1;
    }

    TrialDebug debug;
    TrialMetrics m = run_trial(cfg, snr_db, 0, trial, TrialOptions{}, &debug);

    json summary = {
        {"snr_db", snr_db},
        {"bits", cfg.adc.str()},
        {"trial", trial},
        {"position_sq_err_m2", m.position_sq_err},
        {"aoa_sq_err_rad2", m.aoa_sq_err},
        {"doppler_mse_bins2", m.doppler_mse},
        {"gain_mse", m.gain_mse},
        {"crlb_position_m2", m.crlb_position},
        {"crlb_aoa_rad2", m.crlb_aoa},
        {"crlb_doppler_bins2", m.crlb_doppler},
        {"crlb_gain", m.crlb_gain},
        {"ber", m.bits_sent ? double(m.bit_errors) / m.bits_sent : 0.0},
        {"bits_sent", m.bits_sent},
        {"music_complete", m.music_complete},
    };
    std::cout << summary.dump(2) << "\n";

    if (!dump_path.empty()) {
        std::ofstream f(dump_path);
        if (!f) {
            std::cerr << "cannot open dump file '" << dump_path << "'\n";
            return 1;
        }
        json truth = json::array();
        for (const auto& p : debug.truth.paths) truth.push_back(path_to_json(p));
        f << json{{"stage", "paths"}, {"paths", truth}}.dump() << "\n";
        f << json{{"stage", "frontend"},
                  {"channel_noise_var", debug.channel_noise_var},
                  {"effective_noise_var", debug.effective_noise_var},
                  {"alpha", debug.alpha}}
                 .dump()
          << "\n";
        f << json{{"stage", "music"}, {"peaks_rad", debug.music_peaks_rad}}.dump() << "\n";
        json est = json::array();
        for (const auto& e : debug.estimates)
            est.push_back(json{{"aoa_rad", e.aoa_rad},
                               {"doppler", e.doppler_total()},
                               {"gain_re", e.gain.real()},
                               {"gain_im", e.gain.imag()},
                               {"residual_energy", e.residual_energy}});
        f << json{{"stage", "estimates"}, {"paths", est}}.dump() << "\n";
        f << json{{"stage", "position"},
                  {"estimate", {debug.position_estimate.x(), debug.position_estimate.y()}},
                  {"truth", {debug.position_truth.x(), debug.position_truth.y()}}}
                 .dump()
          << "\n";
        f << json{{"stage", "downlink"}, {"precoder_gain", debug.precoder_gain}}.dump() << "\n";
        f << json{{"stage", "metrics"}, {"summary", summary}}.dump() << "\n";
    }
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_path, const std::string& bits,
              const std::string& snr, int trials, std::uint64_t seed_override, bool seed_given,
              int workers, const std::string& metrics, const std::string& dump_path) {
    FrameConfig cfg = load_or_default(config_path);
    if (seed_given) cfg.seed = seed_override;

    SweepSpec spec;
    spec.dump_path = dump_path;
    spec.snr_db = snr.empty() ? cfg.snr_db : parse_double_list(snr);
    if (!bits.empty()) spec.bits = parse_bits_list(bits);
    spec.trials = trials > 0 ? trials : cfg.trials;
    spec.seed = cfg.seed;
    spec.workers = workers;
    if (!metrics.empty()) {
        spec.metrics.clear();
        std::stringstream ss(metrics);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) spec.metrics.push_back(item);
    }

    auto rows = run_sweep(spec, cfg);
    if (out_path.empty()) {
        write_csv(std::cout, rows, cfg, spec);
    } else {
        write_csv_file(out_path, rows, cfg, spec);
        std::cout << "wrote " << rows.size() << " rows to " << out_path << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"OTFS integrated positioning and communication link simulator"};
    app.require_subcommand(1);

    std::string config_path, out_path, bits, snr_list, dump_path, metrics;
    double snr_single = 30.0;
    int trials = 0, draws = 100, trial_index = 0, workers = 0;
    std::uint64_t seed = 0;

    CLI::App* validate_cmd = app.add_subcommand("validate-config", "check a scenario file");
    validate_cmd->add_option("--config", config_path, "scenario file (key = value lines)");

    CLI::App* crlb_cmd = app.add_subcommand("crlb", "evaluate bounds only, no Monte Carlo");
    crlb_cmd->add_option("--config", config_path, "scenario file");
    crlb_cmd->add_option("--seed", seed, "master seed");
    crlb_cmd->add_option("--bits", bits, "ADC bits (e.g. 5 or inf)");
    crlb_cmd->add_option("--snr", snr_single, "SNR in dB");
    crlb_cmd->add_option("--draws", draws, "channel draws to average");

    CLI::App* trial_cmd = app.add_subcommand("single-trial", "run one trial, optionally dump stages");
    trial_cmd->add_option("--config", config_path, "scenario file");
    trial_cmd->add_option("--seed", seed, "master seed");
    trial_cmd->add_option("--bits", bits, "ADC bits");
    trial_cmd->add_option("--snr", snr_single, "SNR in dB");
    trial_cmd->add_option("--trial", trial_index, "trial index within the stream");
    trial_cmd->add_option("--dump", dump_path, "write per-stage JSON lines here");

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "full SNR x bits Monte-Carlo sweep to CSV");
    sweep_cmd->add_option("--config", config_path, "scenario file");
    sweep_cmd->add_option("--seed", seed, "master seed");
    sweep_cmd->add_option("--out", out_path, "output CSV path (stdout if omitted)");
    sweep_cmd->add_option("--bits", bits, "comma list, e.g. 3,4,5,inf");
    sweep_cmd->add_option("--snr", snr_list, "comma list of SNR points in dB");
    sweep_cmd->add_option("--trials", trials, "trials per grid point");
    sweep_cmd->add_option("--workers", workers, "worker threads (default: env or cores)");
    sweep_cmd->add_option("--metrics", metrics, "comma list of metrics to record");
    sweep_cmd->add_option("--dump", dump_path, "per-trial JSON-lines dump path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    bool seed_given = (crlb_cmd->count("--seed") + trial_cmd->count("--seed") +
                       sweep_cmd->count("--seed")) > 0;
    try {
        if (validate_cmd->parsed()) return cmd_validate(config_path);
        if (crlb_cmd->parsed()) return cmd_crlb(config_path, bits, snr_single, draws, seed, seed_given);
        if (trial_cmd->parsed())
            return cmd_single_trial(config_path, bits, snr_single, trial_index, seed, seed_given, dump_path);
        if (sweep_cmd->parsed())
            return cmd_sweep(config_path, out_path, bits, snr_list, trials, seed, seed_given, workers,
                             metrics, dump_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
