// Copyright 2026 The v1spin Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Time-domain simulation of pulse sequences on the ground-state quartet.
//
// The state is the ten-level density matrix of the optical model, optionally
// tensored with one I = 1/2 nucleus (electron index major). Microwave pulses
// are ideal rotations on the addressed pair. Waits evolve the ground levels
// in the frame rotating with the microwave carriers. Laser and readout steps
// trace out the nucleus, propagate with the Lindblad model, then leave the
// nucleus maximally mixed; each is followed by a dark settle so the excited
// and shelving levels are empty before the next coherent step.
//
// A2 always names the optical line at higher laser frequency and A1 the other
// one. With a positive excited-state splitting A2 addresses |m| = 3/2.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "v1spin/common.hpp"
#include "v1spin/default_rates.hpp"
#include "v1spin/fitkit.hpp"
#include "v1spin/lindblad.hpp"
#include "v1spin/sequence.hpp"
#include "v1spin/spincore.hpp"

namespace v1spin::pulsesim {

/// Secular hyperfine coupling to one I = 1/2 nucleus, all in kHz.
struct NuclearCoupling {
  double a_par = 10.0;
  double a_perp = 29.0;
  double omega_i = 77.9;

  void validate() const;
};

struct SequenceSettings {
  double mw_drive_mhz = defaults::kMwRabiMhz;  // Rabi on a pair is 2 * <a|Sx|b> * drive
  double mw_detuning_mhz = 0.0;                // carrier detuning, same for all channels
  double t2star_us = defaults::kT2StarUs;      // <= 0 or inf: no inhomogeneous dephasing
  double t2_us = defaults::kT2Us;              // <= 0 or inf: no homogeneous decay
  double t2_stretch = defaults::kEchoStretch;
  double mw_mixing_rate = defaults::kMwRate;   // pair rate for "with MWk", 1/us
  double offres_rate = 0.25;                   // OFFRES depolarizing rate, 1/us
  double settle_us = 2.0;
  int ensemble_nodes = 64;                     // Gauss-Hermite nodes for T2*
  /// Ground populations (+3/2, +1/2, -1/2, -3/2) at t = 0; uniform when unset.
  std::optional<std::array<double, 4>> initial_populations;

  void validate() const;
};

struct SequenceResult {
  Trace signal;  // readout signal versus the swept value (us), or a single point
  /// Ground populations (+3/2, +1/2, -1/2, -3/2) at the start of the final
  /// readout, or at the end when there is none. One entry per sweep point.
  std::vector<std::array<double, 4>> populations;
  std::vector<std::string> warnings;
};

/// The ten-level model used for a sequence: fine-structure values from `sys`,
/// rates from `model`. Six-level models are promoted with the same rates.
lindblad::FineStructureModel sequence_model(const spincore::SpinSystem& sys,
                                            const lindblad::FineStructureModel& model);

/// Readout signal is the excited-state population integrated over the
/// readout window, divided by the same integral for an equal mixture of the
/// two levels the line addresses.
SequenceResult simulate_sequence(const PulseSequence& seq, const spincore::SpinSystem& sys,
                                 const lindblad::FineStructureModel& model,
                                 const std::optional<NuclearCoupling>& coupling = std::nullopt,
                                 const SequenceSettings& settings = {});

/// Rabi frequency of a microwave channel (1..3) in MHz.
double rabi_frequency(int channel, double drive_mhz);

/// Pair rotation on a `dim`-level space; pair from lindblad::FineStructureModel::mw_pair.
CMat mw_unitary(int channel, double theta, double phase, std::size_t dim = 4);

/// Echo amplitude -<S_y> on the -1/2 / -3/2 pair after pi/2 - tau - pi - tau,
/// by unitary propagation of the 8-dimensional electron x nucleus state.
/// Normalized so the uncoupled echo is 1.
double eseem_quantum_oracle(const NuclearCoupling& coupling, double tau_us);

enum class EchoBackend { analytic, quantum };

/// Modulation times exp(-(2 tau / T2)^n). Without a coupling the modulation is 1.
Trace hahn_echo_trace(const std::vector<double>& tau_us, const std::optional<NuclearCoupling>& coupling,
                      double t2_us, double stretch, EchoBackend backend = EchoBackend::analytic);

struct InitializationResult {
  std::vector<double> tau_us;
  // Populations in fitkit order (-3/2, -1/2, +1/2, +3/2).
  std::vector<fitkit::Populations> simulated;
  std::vector<fitkit::Populations> reconstructed;
  std::vector<fitkit::Visibilities> visibilities;
  std::vector<bool> ordering_ok;
  std::vector<std::string> warnings;
};

/// Depolarize, pump on A2 with MW3 for each tau, then reconstruct populations
/// from the three Rabi visibilities (MW3, MW2 followed by an MW3 swap, MW1).
InitializationResult initialization_experiment(const std::vector<double>& tau_init_us,
                                               const spincore::SpinSystem& sys,
                                               const lindblad::FineStructureModel& model,
                                               const SequenceSettings& settings = {});

struct SignWitness {
  double contrast_positive = 0;
  double contrast_negative = 0;
  double ratio = 0;
  bool positive = false;  // true when D_es > 0 is the consistent hypothesis
  Trace trace_positive;
  Trace trace_negative;
};

/// Pumps on A2 with MW3, drives MW2, swaps with an MW3 pi pulse and reads A2,
/// once with the excited-state splitting as given and once sign-flipped.
SignWitness zfs_sign_witness(const spincore::SpinSystem& sys,
                             const lindblad::FineStructureModel& model,
                             const SequenceSettings& settings = {});

/// CW ODMR: time-averaged |+-3/2> population under
/// H = D Sz^2 + (Z - f) Sz + drive Sx, from the given ground populations
/// (+3/2, +1/2, -1/2, -3/2).
Trace odmr_spectrum(const spincore::SpinSystem& sys, const std::vector<double>& freq_mhz,
                    double drive_mhz, const std::array<double, 4>& populations);

// Standard sequences. Swept symbols are named in the returned sweep.
PulseSequence rabi_sequence(int channel, double t_max_us, int points);
PulseSequence fid_sequence(double tau_max_us, int points);
PulseSequence hahn_echo_sequence(double tau_max_us, int points);
PulseSequence init_fidelity_sequence(double tau_max_us, int points);

}  // namespace v1spin::pulsesim
