// SPDX-License-Identifier: Apache-2.0
#include "ipac/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace ipac {

LosParams derive_los(const Geometry& geom) {
    double d = geom.user_m.norm();
    if (d <= 0.0) throw std::invalid_argument("derive_los: user position has zero norm");
    LosParams los;
    los.delay_s = d / kSpeedOfLight;
    los.aoa_rad = std::atan2(geom.user_m.y(), geom.user_m.x());
    return los;
}

Eigen::Vector2d position_from_los(double delay_s, double aoa_rad) {
    double range = kSpeedOfLight * delay_s;
    return {range * std::cos(aoa_rad), range * std::sin(aoa_rad)};
}

ValidationReport validate(const FrameConfig& cfg) {
    ValidationReport rep;
    auto fail = [&rep](const std::string& msg) { rep.errors.push_back(msg); };

    if (cfg.num_subcarriers < 1) fail("num_subcarriers must be >= 1");
    if (cfg.num_timeslots < 1) fail("num_timeslots must be >= 1");
    if (cfg.subcarrier_spacing_hz <= 0) fail("subcarrier_spacing_hz must be positive");
    if (cfg.carrier_hz <= 0) fail("carrier_hz must be positive");
    if (cfg.num_rx_antennas < 2) fail("num_rx_antennas must be >= 2");
    if (cfg.num_tx_antennas < 1) fail("num_tx_antennas must be >= 1");
    if (cfg.num_paths < 1) fail("num_paths must be >= 1");
    if (cfg.subarray_length < 1) fail("subarray_length must be >= 1");
    if (cfg.subarray_length > cfg.num_rx_antennas) fail("subarray longer than array");
    if (cfg.num_paths >= cfg.num_subcarriers) fail("delay grid overflow");
    if (cfg.max_doppler_bins < 0) fail("max_doppler_bins must be non-negative");
    if (cfg.max_doppler_bins > cfg.num_timeslots / 2.0) fail("max_doppler_bins exceeds the Doppler grid");
    if (cfg.pdp_decay < 0) fail("pdp_decay must be non-negative");
    if (cfg.trials < 1) fail("trials must be >= 1");
    if (cfg.snr_db.empty()) fail("snr_db list must be non-empty");
    if (cfg.user_x_m == 0.0 && cfg.user_y_m == 0.0) fail("user position must not coincide with the base station");
    if (cfg.music_grid_deg <= 0) fail("music_grid_deg must be positive");
    if (cfg.data_frames_per_trial < 1) fail("data_frames_per_trial must be >= 1");

    // Subspace identifiability: the noise subspace must be non-empty and the
    // smoothed covariance must support num_paths sources.
    int k = cfg.num_rx_antennas - cfg.subarray_length + 1;
    rep.subarray_count = k;
    if (cfg.subarray_length <= cfg.num_rx_antennas && cfg.subarray_length >= 1) {
        if (cfg.num_paths >= cfg.subarray_length) fail("num_paths must be < subarray_length");
        if (cfg.num_paths > k) fail("num_paths exceeds subarray count");
    }
    return rep;
}

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
    size_t pos = 0;
    double x = 0;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError("config: bad numeric value for '" + key + "': " + v);
    }
    if (pos != v.size()) throw ConfigError("config: bad numeric value for '" + key + "': " + v);
    return x;
}

int to_int(const std::string& key, const std::string& v) {
    double x = to_double(key, v);
    if (x != std::floor(x)) throw ConfigError("config: expected integer for '" + key + "': " + v);
    return static_cast<int>(x);
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(to_double(key, item));
    }
    if (out.empty()) throw ConfigError("config: empty list for '" + key + "'");
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config: expected boolean for '" + key + "': " + v);
}

}  // namespace

FrameConfig parse_config_text(const std::string& text) {
    FrameConfig cfg;
    bool velocity_given = false;
    bool kmax_given = false;
    double velocity_kmh = 0.0;

    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) + " is not 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw ConfigError("config: line " + std::to_string(lineno) + " has an empty key or value");

        if (key == "num_subcarriers") cfg.num_subcarriers = to_int(key, val);
        else if (key == "num_timeslots") cfg.num_timeslots = to_int(key, val);
        else if (key == "subcarrier_spacing_hz") cfg.subcarrier_spacing_hz = to_double(key, val);
        else if (key == "carrier_hz") cfg.carrier_hz = to_double(key, val);
        else if (key == "num_tx_antennas") cfg.num_tx_antennas = to_int(key, val);
        else if (key == "num_rx_antennas") cfg.num_rx_antennas = to_int(key, val);
        else if (key == "num_paths") cfg.num_paths = to_int(key, val);
        else if (key == "subarray_length") cfg.subarray_length = to_int(key, val);
        else if (key == "adc_bits") cfg.adc = AdcResolution::parse(val);
        else if (key == "max_doppler_bins") { cfg.max_doppler_bins = to_double(key, val); kmax_given = true; }
        else if (key == "max_velocity_kmh") { velocity_kmh = to_double(key, val); velocity_given = true; }
        else if (key == "pdp_decay") cfg.pdp_decay = to_double(key, val);
        else if (key == "user_x_m") cfg.user_x_m = to_double(key, val);
        else if (key == "user_y_m") cfg.user_y_m = to_double(key, val);
        else if (key == "snr_db") cfg.snr_db = to_list(key, val);
        else if (key == "trials") cfg.trials = to_int(key, val);
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_double(key, val));
        else if (key == "nlos_sector_deg") cfg.nlos_sector_deg = to_double(key, val);
        else if (key == "nlos_guard_deg") cfg.nlos_guard_deg = to_double(key, val);
        else if (key == "nlos_min_sep_deg") cfg.nlos_min_sep_deg = to_double(key, val);
        else if (key == "music_grid_deg") cfg.music_grid_deg = to_double(key, val);
        else if (key == "doppler_refine_tol") cfg.doppler_refine_tol = to_double(key, val);
        else if (key == "joint_gain_refit") cfg.joint_gain_refit = to_bool(key, val);
        else if (key == "data_frames_per_trial") cfg.data_frames_per_trial = to_int(key, val);
        else throw ConfigError("config: unknown key '" + key + "' (line " + std::to_string(lineno) + ")");
    }

    // The user speed only pins the Doppler spread; an explicit grid value wins.
    if (velocity_given && !kmax_given) {
        double v_ms = velocity_kmh / 3.6;
        double doppler_hz = v_ms * cfg.carrier_hz / kSpeedOfLight;
        cfg.max_doppler_bins = doppler_hz * cfg.num_timeslots / cfg.subcarrier_spacing_hz;
    }
    return cfg;
}

FrameConfig load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

std::string config_to_text(const FrameConfig& cfg) {
    std::ostringstream os;
    os.precision(17);
    os << "num_subcarriers = " << cfg.num_subcarriers << "\n"
       << "num_timeslots = " << cfg.num_timeslots << "\n"
       << "subcarrier_spacing_hz = " << cfg.subcarrier_spacing_hz << "\n"
       << "carrier_hz = " << cfg.carrier_hz << "\n"
       << "num_tx_antennas = " << cfg.num_tx_antennas << "\n"
       << "num_rx_antennas = " << cfg.num_rx_antennas << "\n"
       << "num_paths = " << cfg.num_paths << "\n"
       << "subarray_length = " << cfg.subarray_length << "\n"
       << "adc_bits = " << cfg.adc.str() << "\n"
       << "max_doppler_bins = " << cfg.max_doppler_bins << "\n"
       << "pdp_decay = " << cfg.pdp_decay << "\n"
       << "user_x_m = " << cfg.user_x_m << "\n"
       << "user_y_m = " << cfg.user_y_m << "\n";
    os << "snr_db = ";
    for (size_t i = 0; i < cfg.snr_db.size(); ++i) os << (i ? "," : "") << cfg.snr_db[i];
    os << "\n"
       << "trials = " << cfg.trials << "\n"
       << "seed = " << cfg.seed << "\n"
       << "nlos_sector_deg = " << cfg.nlos_sector_deg << "\n"
       << "nlos_guard_deg = " << cfg.nlos_guard_deg << "\n"
       << "nlos_min_sep_deg = " << cfg.nlos_min_sep_deg << "\n"
       << "music_grid_deg = " << cfg.music_grid_deg << "\n"
       << "doppler_refine_tol = " << cfg.doppler_refine_tol << "\n"
       << "joint_gain_refit = " << (cfg.joint_gain_refit ? "true" : "false") << "\n"
       << "data_frames_per_trial = " << cfg.data_frames_per_trial << "\n";
    return os.str();
}

Geometry geometry_from_config(const FrameConfig& cfg) {
    Geometry g;
    g.user_m = Eigen::Vector2d(cfg.user_x_m, cfg.user_y_m);
    return g;
}

Geometry effective_geometry(const FrameConfig& cfg) {
    Geometry raw = geometry_from_config(cfg);
    LosParams los = derive_los(raw);
    // LoS sits on the first delay bin; snap the range onto it.
    double grid_delay = cfg.delay_bin_seconds(1);
    Geometry eff;
    eff.user_m = position_from_los(grid_delay, los.aoa_rad);
    return eff;
}

}  // namespace ipac
