#pragma once

#include <cstdint>
#include <vector>

#include "qlink/linkmodel.hpp"
#include "qlink/qcore.hpp"

// Seeded Monte-Carlo generator of the full experimental sequence. Attempts
// are partitioned into fixed-size blocks, each driven by its own counter-based
// RNG stream keyed by (seed, block index); blocks are simulated in parallel
// and merged by block order, so a log is byte-identical for any worker count.
namespace qlink::sim {

enum class Origin { signal, qfc_noise, dark_count };

const char* to_string(Origin origin);

struct EventRecord {
    std::uint64_t attempt_index = 0;
    double sim_time = 0.0;  // s
    int detector = 1;       // 1 or 2
    qcore::PhotonBasis photon_basis = qcore::PhotonBasis::HV;
    qcore::PhotonOutcome photon_outcome = qcore::PhotonOutcome::first;
    double atom_alpha_deg = 0.0;
    qcore::AtomOutcome atom_outcome = qcore::AtomOutcome::dark;
    Origin origin = Origin::signal;
    double readout_delay = 0.0;  // s
};

struct AngleWeight {
    double alpha_deg = 0.0;
    int weight = 1;
};

struct RunConfig {
    linkmodel::LinkConfig link;
    std::uint64_t target_events = 0;  // exactly one of events / minutes is set
    double target_minutes = 0.0;
    double max_sim_minutes = 0.0;  // cap; 0 picks a generous default
    std::vector<AngleWeight> atom_angles;            // default: 0..157.5 step 22.5
    std::vector<qcore::PhotonBasis> photon_bases;    // default: HV, DA
    std::uint64_t seed = 0;
    std::uint64_t block_size = 1ull << 20;  // attempts per RNG stream

    void apply_defaults();
    void validate() const;
};

struct RunSummary {
    std::uint64_t attempts = 0;
    std::uint64_t detections = 0;
    std::uint64_t signal_events = 0;
    std::uint64_t noise_events = 0;
    std::uint64_t loading_cycles = 0;
    double sim_time_s = 0.0;
    bool truncated = false;
};

struct EventLog {
    RunConfig config;  // echo
    std::vector<EventRecord> records;
    RunSummary summary;
};

// A single valid density matrix whose H/V/D/A fringe visibilities equal the
// given values: the ideal state sent through an anisotropic atom-qubit
// dephasing channel, plus a small photon-marginal polarization term (pure
// dephasing alone cannot split the H and V contrasts).
qcore::DensityMatrix correlated_state(const linkmodel::Visibilities& vis);

// n_threads = 0 reads QLINK_THREADS, falling back to the hardware count.
EventLog simulate_run(const RunConfig& config, int n_threads = 0);

struct SignalFraction {
    double value = 0.0;
    bool infinite = false;
};

// Ground-truth signal over non-signal count ratio.
SignalFraction signal_fraction(const EventLog& log);

}  // namespace qlink::sim
