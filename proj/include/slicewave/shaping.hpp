#pragma once

#include "slicewave/sigcore.hpp"

namespace slicewave {

// Maxwell-Boltzmann prior over a constellation. The constellation inside is
// re-scaled so mean energy under probs is exactly 1, so shaped and uniform
// sources launch at the same power.
struct ShapingDistribution {
    Constellation constellation;
    std::vector<double> probs;
    double nu = 0.0;
    double entropy = 0.0;         // bits per symbol per polarization
};

double entropy_bits(const std::vector<double>& probs);

// probs_i proportional to exp(-nu |x_i|^2) with x_i on the raw integer grid.
ShapingDistribution mb_distribution(const Constellation& c, double nu);

// Invert entropy(mb_distribution(c, nu)) = target by bisection; entropy is
// strictly decreasing in nu.
double solve_nu(const Constellation& c, double target_entropy);

// I.i.d. draws, returned as indices into d.constellation.
std::vector<std::uint32_t> draw_symbols(const ShapingDistribution& d, std::size_t n,
                                        std::uint64_t seed);

CVec points_of(const ShapingDistribution& d, const std::vector<std::uint32_t>& indices);

struct PilotFrame {
    CVec symbols;                              // data with pilots interleaved
    std::vector<std::size_t> pilot_positions;  // ascending, multiples of the period
    CVec pilot_symbols;                        // QPSK, aligned with pilot_positions
    double pilot_rate = 0.0;
};

// Period between pilots; 0 disables pilots.
std::size_t pilot_period(double pilot_rate);

// Data symbols that fit in a frame of frame_len once pilots are inserted.
std::size_t data_length_for_frame(std::size_t frame_len, double pilot_rate);

// Insert one seeded QPSK pilot every period symbols, starting at index 0.
PilotFrame frame_with_pilots(const CVec& data, double pilot_rate, std::uint64_t seed);

// Positions a receiver expects pilots at, given only frame length and rate.
std::vector<std::size_t> pilot_positions_for(std::size_t frame_len, double pilot_rate);

// Regenerate the pilot point sequence from the seed alone.
CVec pilot_sequence(std::size_t count, std::uint64_t seed);

// Inverse of framing: the data symbols in their original order.
CVec strip_pilots(const CVec& frame, const std::vector<std::size_t>& pilot_positions);

// Circularly delay a frame by shift symbols: the reference a receiver needs
// for a tributary that rides a split-and-delay emulator. Positions are
// re-sorted; pilot symbols follow their positions.
PilotFrame delay_frame(const PilotFrame& frame, std::size_t shift);

}  // namespace slicewave
