#pragma once

#include "slicewave/shaping.hpp"
#include "slicewave/sigcore.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace slicewave {

enum class CprInterp { linear, hold };

// Receiver-side knob set. The pilot frames are the transmitted references
// for each polarization; a split-and-delay tributary carries a delayed
// frame (delay_frame), so positions may differ between pols.
struct DspConfig {
    double cdc_total_ps_per_nm = 0.0;   // accumulated D*L to undo
    double cdc_slope_ps_per_nm2 = 0.0;  // accumulated S*L
    double carrier_freq = 0.0;          // Hz; 0 takes the record center
    double symbol_rate = 0.0;           // Baud
    double rolloff = 0.05;

    int mimo_taps = 21;          // odd, T/2 spaced
    double mimo_step = 2e-3;
    double mimo_converge_mse = 0.5;  // pilot MSE above this flags non-convergence

    PilotFrame pilot_x, pilot_y;
    ShapingDistribution source;  // decision grid for DD updates and the WL stage

    CprInterp cpr_interp = CprInterp::linear;
    // Centered complex average over this many pilot phasors before the phase
    // is interpolated. 1 keeps raw per-pilot phases and tracks fast phase
    // noise; wider odd windows trade tracking bandwidth for estimator noise,
    // the right trade on links whose carriers are static within a record.
    int cpr_avg_pilots = 1;
    int wl_taps = 7;  // 0 skips the widely-linear stage
    double wl_step = 1e-3;
    int wl_passes = 8;
    int sps_in = 2;

    void validate() const;
};

// Dual-pol symbol stream at 1 sample per symbol plus recovery bookkeeping.
// Until strip, x/y still interleave pilots at their per-pol positions.
struct EqualizedFrame {
    CVec x, y;
    std::vector<std::size_t> pilot_pos_x, pilot_pos_y;
    CVec pilot_x, pilot_y;  // transmitted pilot references
    double symbol_rate = 0.0;

    bool residual_pilots_removed = false;
    double estimated_freq_offset = 0.0;  // Hz, accumulated over recovery calls
    std::vector<double> phase_track;     // radians per symbol from CPR
    bool converged = false;
    double pilot_mse = 0.0;
    bool cycle_slip_warning = false;
};

// Inverse of the accumulated channel dispersion phase, exact on one cyclic
// FFT up to max_fft samples, overlap-save blocks beyond that.
DualPolWaveform cd_compensate(const DualPolWaveform& record, double total_ps_per_nm,
                              double slope_ps_per_nm2, double f0,
                              std::size_t max_fft = std::size_t{1} << 22);

// T/2-spaced 2x2 butterfly LMS, two cyclic passes: pilots-only first, then
// pilot plus decision-directed with outputs taken from the second pass.
// References are phase-anchored at each pilot so the taps never chase the
// carrier. Output keeps the carrier rotation for the stages downstream.
EqualizedFrame mimo_equalize(const DualPolWaveform& record, const DspConfig& cfg);

// Common frequency offset from the regression slope of unwrapped pilot
// phases; derotates and accumulates into estimated_freq_offset. Estimates
// at or beyond symbol_rate/8 are rejected as aliased.
EqualizedFrame freq_offset_recover(const EqualizedFrame& frame);

// Pilot-aided carrier phase: pooled per-pilot phase, optionally averaged over
// a centered window of avg_pilots phasors, unwrapped, interpolated per
// cpr_interp, removed from both pols and logged in phase_track. A near-pi
// step between adjacent raw pilot phases sets cycle_slip_warning.
EqualizedFrame carrier_phase_recover(const EqualizedFrame& frame, CprInterp interp,
                                     int avg_pilots = 1);

// Widely-linear per-pol LMS: y = sum a_k u[n-k] + sum b_k conj(u[n-k]).
// Trains on the given references when provided (test mode), otherwise on
// the frame's own pilots. mse_per_pass, when given, collects the training
// trajectory.
struct WlTraining {
    const CVec* ref_x = nullptr;
    const CVec* ref_y = nullptr;
    double step = 1e-3;
    int passes = 8;
    std::vector<double>* mse_per_pass = nullptr;
    std::vector<CVec>* taps_out = nullptr;  // receives {a_x, b_x, a_y, b_y}
};
EqualizedFrame wl_postequalize(const EqualizedFrame& frame, int wl_taps,
                               const WlTraining& train = {});

// Full receive chain: cd_compensate, resample to 2 sps, matched RRC,
// mimo_equalize, freq_offset_recover, carrier_phase_recover,
// wl_postequalize, pilot strip. A split-and-delay tributary is handled by
// handing this the delayed pilot frame, not by shifting samples. Errors are
// rethrown with the failing stage prefixed.
EqualizedFrame demodulate(const DualPolWaveform& record, const DspConfig& cfg);

// Constellation dump rows: index,pol,re,im,is_pilot.
std::string equalized_csv_header();
std::string equalized_csv_row(std::size_t index, char pol, cplx v, bool is_pilot);

}  // namespace slicewave
