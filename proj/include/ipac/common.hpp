// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ipac {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

/// ADC word length; bits == 0 encodes the unquantized (infinite-resolution) reference.
struct AdcResolution {
    int bits = 0;

    static AdcResolution infinite() { return AdcResolution{0}; }
    static AdcResolution finite(int b) {
        if (b <= 0) throw std::invalid_argument("AdcResolution: bits must be >= 1");
        return AdcResolution{b};
    }

    bool is_finite() const { return bits > 0; }
    bool operator==(const AdcResolution& o) const { return bits == o.bits; }

    std::string str() const { return is_finite() ? std::to_string(bits) : std::string("inf"); }

    static AdcResolution parse(const std::string& s) {
        if (s == "inf" || s == "infinite" || s == "Inf") return infinite();
        size_t pos = 0;
        int b = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("AdcResolution: cannot parse '" + s + "'");
        return finite(b);
    }
};

/// Deterministic per-task stream: the master seed plus a tag path selects the substream.
/// Trials seeded this way are independent of worker count and scheduling order.
inline std::mt19937_64 make_rng(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
    std::vector<std::uint32_t> words;
    words.reserve(2 * (tags.size() + 1));
    auto push64 = [&words](std::uint64_t v) {
        words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
        words.push_back(static_cast<std::uint32_t>(v >> 32));
    };
    push64(master);
    for (auto t : tags) push64(t);
    std::seed_seq seq(words.begin(), words.end());
    return std::mt19937_64(seq);
}

/// Circularly symmetric complex Gaussian with E|z|^2 = 1.
inline cplx standard_complex_gaussian(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0 / std::sqrt(2.0));
    double re = n(rng);
    double im = n(rng);
    return {re, im};
}

}  // namespace ipac
