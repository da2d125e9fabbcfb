// SPDX-License-Identifier: Apache-2.0
#include "ipac/otfs.hpp"

namespace ipac {

CMat unitary_dft(int n) {
    CMat f(n, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (int k = 0; k < n; ++k) {
        for (int j = 0; j < n; ++j) {
            double phase = -2.0 * kPi * k * j / n;
            f(k, j) = scale * cplx(std::cos(phase), std::sin(phase));
        }
    }
    return f;
}

CVec DdGrid::vectorized() const {
    return Eigen::Map<const CVec>(symbols.data(), symbols.size());
}

DdGrid DdGrid::from_vector(const CVec& x, int num_subcarriers, int num_timeslots) {
    if (x.size() != static_cast<Eigen::Index>(num_subcarriers) * num_timeslots)
        throw std::invalid_argument("DdGrid::from_vector: length mismatch");
    DdGrid g;
    g.symbols = Eigen::Map<const CMat>(x.data(), num_subcarriers, num_timeslots);
    return g;
}

CVec time_from_dd(const CVec& dd, int num_subcarriers, int num_timeslots) {
    if (dd.size() != static_cast<Eigen::Index>(num_subcarriers) * num_timeslots)
        throw std::invalid_argument("time_from_dd: length mismatch");
    Eigen::Map<const CMat> x(dd.data(), num_subcarriers, num_timeslots);
    CMat f = unitary_dft(num_timeslots);
    CMat s = x * f.adjoint();
    return Eigen::Map<const CVec>(s.data(), s.size());
}

CVec dd_from_time(const CVec& td, int num_subcarriers, int num_timeslots) {
    if (td.size() != static_cast<Eigen::Index>(num_subcarriers) * num_timeslots)
        throw std::invalid_argument("dd_from_time: length mismatch");
    Eigen::Map<const CMat> s(td.data(), num_subcarriers, num_timeslots);
    CMat f = unitary_dft(num_timeslots);
    CMat y = s * f;  // F_N is symmetric, so right-multiplying realizes F_N kron I_M
    return Eigen::Map<const CVec>(y.data(), y.size());
}

CVec otfs_modulate(const DdGrid& grid) {
    return time_from_dd(grid.vectorized(),
                        static_cast<int>(grid.symbols.rows()),
                        static_cast<int>(grid.symbols.cols()));
}

CVec otfs_demodulate(const CVec& r_time, int num_subcarriers, int num_timeslots, int num_antennas) {
    const Eigen::Index block = static_cast<Eigen::Index>(num_subcarriers) * num_timeslots;
    if (r_time.size() != block * num_antennas)
        throw std::invalid_argument("otfs_demodulate: length mismatch");
    CVec out(r_time.size());
    for (int a = 0; a < num_antennas; ++a)
        out.segment(a * block, block) =
            dd_from_time(r_time.segment(a * block, block), num_subcarriers, num_timeslots);
    return out;
}

DdGrid generate_pilot_grid(int num_subcarriers, int num_timeslots, std::mt19937_64& rng) {
    static const cplx kQpsk[4] = {
        {M_SQRT1_2, M_SQRT1_2},
        {-M_SQRT1_2, M_SQRT1_2},
        {-M_SQRT1_2, -M_SQRT1_2},
        {M_SQRT1_2, -M_SQRT1_2},
    };
    std::uniform_int_distribution<int> pick(0, 3);
    DdGrid g;
    g.symbols.resize(num_subcarriers, num_timeslots);
    for (int n = 0; n < num_timeslots; ++n)
        for (int m = 0; m < num_subcarriers; ++m) g.symbols(m, n) = kQpsk[pick(rng)];
    return g;
}

}  // namespace ipac
