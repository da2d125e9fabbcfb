// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>

#include "ipac/common.hpp"

namespace ipac {

/// Unitary DFT matrix of size n (symmetric, F F^H = I).
CMat unitary_dft(int n);

/// Delay-Doppler symbol grid of shape num_subcarriers x num_timeslots.
struct DdGrid {
    CMat symbols;

    CVec vectorized() const;  // column-major stacking
    static DdGrid from_vector(const CVec& x, int num_subcarriers, int num_timeslots);
};

/// (F_N^H kron I_M) x applied as an inverse DFT across the Doppler axis.
/// Input and output have length M*N; the map is unitary.
CVec time_from_dd(const CVec& dd, int num_subcarriers, int num_timeslots);

/// (F_N kron I_M) s, the inverse of time_from_dd.
CVec dd_from_time(const CVec& td, int num_subcarriers, int num_timeslots);

/// Single-antenna transmit chain: DD grid -> time-domain frame samples.
CVec otfs_modulate(const DdGrid& grid);

/// Multi-antenna receive chain: stacked per-antenna time frames -> stacked
/// per-antenna DD observations, (I_{num_antennas} kron F_N kron I_M) r.
CVec otfs_demodulate(const CVec& r_time, int num_subcarriers, int num_timeslots, int num_antennas);

/// Unit-energy QPSK positioning grid, deterministic for a given stream.
DdGrid generate_pilot_grid(int num_subcarriers, int num_timeslots, std::mt19937_64& rng);

}  // namespace ipac
