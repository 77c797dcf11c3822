#include "qlink/simengine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <thread>

#include "qlink/rng.hpp"

namespace qlink::sim {

namespace {

using qcore::AtomOutcome;
using qcore::PhotonBasis;
using qcore::PhotonOutcome;

struct Cell {
    PhotonBasis basis;
    double alpha_deg;
    // Signal model, from the correlated state:
    double p_first;             // marginal of the first outcome in this basis
    double p_dark_given_first;
    double p_dark_given_second;
    double p_dark_noise;  // unconditioned atom marginal, for noise events
};

struct Schedule {
    std::vector<Cell> cells;

    const Cell& cell_for_attempt(std::uint64_t attempt) const {
        return cells[attempt % cells.size()];
    }
};

Schedule build_schedule(const RunConfig& config) {
    using namespace qcore;
    const linkmodel::Visibilities vis = linkmodel::decohered_visibilities(
        config.link.decoherence, linkmodel::readout_delay(config.link));
    const DensityMatrix rho = correlated_state(vis);
    const DensityMatrix atom_marginal = partial_trace(rho, Subsystem::atom);

    Schedule schedule;
    for (PhotonBasis basis : config.photon_bases) {
        for (const AngleWeight& aw : config.atom_angles) {
            for (int rep = 0; rep < aw.weight; ++rep) {
                Cell cell;
                cell.basis = basis;
                cell.alpha_deg = aw.alpha_deg;
                const AtomReadoutSetting atom{aw.alpha_deg, 0.0};
                const PhotonSetting first{basis, PhotonOutcome::first};
                const PhotonSetting second{basis, PhotonOutcome::second};
                const double p_fd = joint_probability(rho, first, atom, AtomOutcome::dark);
                const double p_fi = joint_probability(rho, first, atom, AtomOutcome::ionized);
                const double p_sd = joint_probability(rho, second, atom, AtomOutcome::dark);
                const double p_si = joint_probability(rho, second, atom, AtomOutcome::ionized);
                cell.p_first = p_fd + p_fi;
                cell.p_dark_given_first = cell.p_first > 0.0 ? p_fd / cell.p_first : 0.0;
                const double p_second = p_sd + p_si;
                cell.p_dark_given_second = p_second > 0.0 ? p_sd / p_second : 0.0;
                cell.p_dark_noise =
                    (atom_marginal.matrix() * dark_state_projector(atom)).trace().real();
                schedule.cells.push_back(cell);
            }
        }
    }
    // Interleave the two bases attempt by attempt.
    if (config.photon_bases.size() == 2) {
        const std::size_t half = schedule.cells.size() / 2;
        std::vector<Cell> interleaved;
        interleaved.reserve(schedule.cells.size());
        for (std::size_t i = 0; i < half; ++i) {
            interleaved.push_back(schedule.cells[i]);
            interleaved.push_back(schedule.cells[half + i]);
        }
        schedule.cells = std::move(interleaved);
    }
    return schedule;
}

struct RawDetection {
    std::uint64_t attempt_index;
    Origin origin;
    int detector;
    PhotonOutcome photon_outcome;
    AtomOutcome atom_outcome;
    bool atom_survived;
};

struct Probabilities {
    double p_signal;
    double p_noise;
    double p_any;
    double signal_given_detection;
    double qfc_given_noise;
};

Probabilities detection_probabilities(const linkmodel::LinkConfig& link) {
    Probabilities p{};
    p.p_signal = linkmodel::overall_detection_probability(link);
    const double pump = linkmodel::pump_noise_rate(link);
    const double dark = link.detectors.total_dark_rate();
    p.p_noise = (pump + dark) * link.detectors.window;
    p.p_any = 1.0 - (1.0 - p.p_signal) * (1.0 - p.p_noise);
    p.signal_given_detection = p.p_any > 0.0 ? p.p_signal / p.p_any : 0.0;
    p.qfc_given_noise = (pump + dark) > 0.0 ? pump / (pump + dark) : 0.0;
    return p;
}

// Detections within one block of attempts; geometric gap sampling keeps the
// cost proportional to the number of detections.
void simulate_block(const RunConfig& config, const Schedule& schedule,
                    const Probabilities& probs, std::uint64_t block_index,
                    std::vector<RawDetection>& out) {
    rng::Stream stream(config.seed, block_index);
    const std::uint64_t begin = block_index * config.block_size;
    const std::uint64_t end = begin + config.block_size;
    if (probs.p_any <= 0.0) return;

    std::uint64_t attempt = begin;
    while (true) {
        const std::uint64_t gap = stream.geometric_failures(probs.p_any);
        if (gap >= end - attempt) break;
        attempt += gap;

        RawDetection det{};
        det.attempt_index = attempt;
        const Cell& cell = schedule.cell_for_attempt(attempt);
        const bool is_signal = stream.uniform() < probs.signal_given_detection;
        if (is_signal) {
            det.origin = Origin::signal;
            const bool first = stream.uniform() < cell.p_first;
            det.photon_outcome = first ? PhotonOutcome::first : PhotonOutcome::second;
            det.detector = first ? 1 : 2;
            const double p_dark = first ? cell.p_dark_given_first : cell.p_dark_given_second;
            det.atom_outcome =
                stream.uniform() < p_dark ? AtomOutcome::dark : AtomOutcome::ionized;
        } else {
            det.origin = stream.uniform() < probs.qfc_given_noise ? Origin::qfc_noise
                                                                  : Origin::dark_count;
            const bool first = stream.uniform() < 0.5;
            det.photon_outcome = first ? PhotonOutcome::first : PhotonOutcome::second;
            det.detector = first ? 1 : 2;
            det.atom_outcome = stream.uniform() < cell.p_dark_noise ? AtomOutcome::dark
                                                                    : AtomOutcome::ionized;
        }
        det.atom_survived = stream.uniform() < config.link.timing.atom_survival;
        out.push_back(det);

        if (++attempt >= end) break;
    }
}

int resolve_threads(int n_threads) {
    if (n_threads > 0) return n_threads;
    if (const char* env = std::getenv("QLINK_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<int>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace

const char* to_string(Origin origin) {
    switch (origin) {
        case Origin::signal: return "signal";
        case Origin::qfc_noise: return "qfc_noise";
        case Origin::dark_count: return "dark_count";
    }
    return "?";
}

void RunConfig::apply_defaults() {
    if (atom_angles.empty())
        for (int i = 0; i < 8; ++i) atom_angles.push_back({22.5 * i, 1});
    if (photon_bases.empty()) photon_bases = {PhotonBasis::HV, PhotonBasis::DA};
}

void RunConfig::validate() const {
    if (target_events == 0 && target_minutes <= 0.0)
        throw std::domain_error("either target_events or target_minutes must be set");
    if (atom_angles.empty()) throw std::domain_error("angle list must be non-empty");
    if (photon_bases.empty() || photon_bases.size() > 2)
        throw std::domain_error("photon bases must be HV and/or DA");
    for (qcore::PhotonBasis b : photon_bases)
        if (b == qcore::PhotonBasis::RL)
            throw std::domain_error("the R/L basis is not analyzed");
    if (block_size == 0) throw std::domain_error("block_size must be positive");
    link.validate();
}

qcore::DensityMatrix correlated_state(const linkmodel::Visibilities& vis) {
    using qcore::Complex;
    using qcore::Matrix;

    for (double v : {vis.h, vis.v, vis.d, vis.a})
        if (v < 0.0 || v > 1.0) throw std::domain_error("visibilities must be in [0, 1]");

    const auto harmonic = [](double x, double y) {
        return (x + y) > 0.0 ? 2.0 * x * y / (x + y) : 0.0;
    };
    const double t1 = harmonic(vis.h, vis.v);
    const double t2 = harmonic(vis.d, vis.a);
    const double t3 = t2;  // unmeasured basis treated like D/A
    const double a_z = vis.h > 0.0 && t1 > 0.0 ? t1 / vis.h - 1.0 : 0.0;
    const double a_x = vis.d > 0.0 && t2 > 0.0 ? t2 / vis.d - 1.0 : 0.0;

    const double w_id = (1.0 + t1 + t2 + t3) / 4.0;
    const double w1 = (1.0 + t1 - t2 - t3) / 4.0;
    const double w2 = (1.0 - t1 + t2 - t3) / 4.0;
    const double w3 = (1.0 - t1 - t2 + t3) / 4.0;
    for (double w : {w_id, w1, w2, w3})
        if (w < -1e-12)
            throw std::domain_error("visibility set is not reachable by a dephasing channel");

    // Atom-qubit Paulis embedded in the qutrit (identity on m = 0).
    const Complex i{0.0, 1.0};
    Matrix sigma1 = Matrix::Zero(3, 3), sigma2 = Matrix::Zero(3, 3), sigma3 = Matrix::Zero(3, 3);
    sigma1(0, 2) = 1.0; sigma1(2, 0) = 1.0; sigma1(1, 1) = 1.0;
    sigma2(0, 2) = -i;  sigma2(2, 0) = i;   sigma2(1, 1) = 1.0;
    sigma3(0, 0) = 1.0; sigma3(2, 2) = -1.0; sigma3(1, 1) = 1.0;

    const qcore::Vector psi = qcore::bell_state_atom_photon().amplitudes();
    const Matrix rho_pure = psi * psi.adjoint();
    const Matrix eye2 = Matrix::Identity(2, 2);

    const auto apply_atom = [&](const Matrix& u) {
        Matrix full = Matrix::Zero(6, 6);
        for (int p = 0; p < 2; ++p)
            for (int q = 0; q < 2; ++q)
                full.block(3 * p, 3 * q, 3, 3) = eye2(p, q) * u;
        return (full * rho_pure * full.adjoint()).eval();
    };

    Matrix rho = w_id * rho_pure + w1 * apply_atom(sigma1) + w2 * apply_atom(sigma2) +
                 w3 * apply_atom(sigma3);

    // Photon-marginal polarization terms; traceless, confined to the atomic
    // qubit block.
    Matrix e_q = Matrix::Zero(3, 3);
    e_q(0, 0) = 1.0;
    e_q(2, 2) = 1.0;
    Matrix z_p = Matrix::Zero(2, 2), x_p = Matrix::Zero(2, 2);
    z_p(0, 0) = 1.0; z_p(1, 1) = -1.0;
    x_p(0, 1) = 1.0; x_p(1, 0) = 1.0;
    const auto kron_local = [&](const Matrix& ph) {
        Matrix full = Matrix::Zero(6, 6);
        for (int p = 0; p < 2; ++p)
            for (int q = 0; q < 2; ++q)
                full.block(3 * p, 3 * q, 3, 3) = ph(p, q) * e_q;
        return full;
    };
    rho += (a_z / 4.0) * kron_local(z_p) + (a_x / 4.0) * kron_local(x_p);

    return qcore::DensityMatrix(std::move(rho));  // validates PSD
}

EventLog simulate_run(const RunConfig& input, int n_threads) {
    RunConfig config = input;
    config.apply_defaults();
    config.validate();

    const Schedule schedule = build_schedule(config);
    const Probabilities probs = detection_probabilities(config.link);
    const linkmodel::TimingParams& timing = config.link.timing;
    const double latency = linkmodel::link_latency(config.link.fiber);
    const double attempt_period = timing.attempt_overhead + latency;
    const double cooling_per_attempt = timing.cooling_duration / timing.cooling_every;
    const double delay = linkmodel::readout_delay(config.link);
    const double event_extra = std::max(delay - latency, 0.0) + timing.event_overhead;

    // Simulated-time budget; the serial replay enforces it exactly.
    double max_seconds;
    if (config.target_minutes > 0.0) {
        max_seconds = config.target_minutes * 60.0;
    } else if (config.max_sim_minutes > 0.0) {
        max_seconds = config.max_sim_minutes * 60.0;
    } else {
        const double expected = probs.p_any > 0.0
            ? config.target_events *
                  (1.0 / probs.p_any * (attempt_period + cooling_per_attempt) + event_extra +
                   (1.0 - timing.atom_survival) * timing.loading_time + 1e-3)
            : 60.0;
        max_seconds = std::max(60.0, 4.0 * expected);
    }
    const std::uint64_t attempts_cap = static_cast<std::uint64_t>(
        max_seconds / (attempt_period + cooling_per_attempt)) + 1;

    const int threads = resolve_threads(n_threads);
    std::vector<RawDetection> detections;
    std::uint64_t next_block = 0;
    std::uint64_t blocks_done = 0;

    while (blocks_done * config.block_size < attempts_cap) {
        // Wave size: enough blocks for the remaining estimate, at least one
        // per worker.
        std::uint64_t want_attempts = attempts_cap - blocks_done * config.block_size;
        if (config.target_events > 0 && probs.p_any > 0.0) {
            const std::uint64_t have = detections.size();
            if (have >= config.target_events) break;
            const double remaining = static_cast<double>(config.target_events - have);
            want_attempts = std::min<std::uint64_t>(
                want_attempts,
                static_cast<std::uint64_t>(remaining / probs.p_any * 1.3) + config.block_size);
        }
        const std::uint64_t wave_blocks =
            std::max<std::uint64_t>(1, (want_attempts + config.block_size - 1) / config.block_size);

        std::vector<std::vector<RawDetection>> results(wave_blocks);
        const int workers = static_cast<int>(
            std::min<std::uint64_t>(static_cast<std::uint64_t>(threads), wave_blocks));
        std::vector<std::thread> pool;
        std::atomic<std::uint64_t> cursor{0};
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                while (true) {
                    const std::uint64_t k = cursor.fetch_add(1);
                    if (k >= wave_blocks) return;
                    simulate_block(config, schedule, probs, next_block + k, results[k]);
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& r : results)
            detections.insert(detections.end(), r.begin(), r.end());
        next_block += wave_blocks;
        blocks_done += wave_blocks;
        if (probs.p_any <= 0.0) break;
    }

    // Serial replay: timing, cooling, loading, truncation.
    EventLog log;
    log.config = config;
    log.records.reserve(config.target_events > 0 ? config.target_events : detections.size());

    double sim_time = timing.loading_time;  // initial trap loading
    std::uint64_t loading_cycles = 1;
    std::uint64_t attempts_used = 0;
    bool truncated = false;

    const auto time_at_attempt = [&](std::uint64_t k, double extras) {
        const std::uint64_t completed = k + 1;
        return timing.loading_time + completed * attempt_period +
               (completed / timing.cooling_every) * timing.cooling_duration + extras;
    };

    double extras_acc = 0.0;
    for (const RawDetection& det : detections) {
        if (config.target_events > 0 && log.records.size() >= config.target_events) break;
        const double t = time_at_attempt(det.attempt_index, extras_acc);
        if (t > max_seconds) {
            truncated = config.target_events > 0;
            attempts_used = det.attempt_index;
            sim_time = time_at_attempt(det.attempt_index > 0 ? det.attempt_index - 1 : 0,
                                       extras_acc);
            break;
        }
        EventRecord rec;
        rec.attempt_index = det.attempt_index;
        rec.sim_time = t;
        rec.detector = det.detector;
        const Cell& cell = schedule.cell_for_attempt(det.attempt_index);
        rec.photon_basis = cell.basis;
        rec.photon_outcome = det.photon_outcome;
        rec.atom_alpha_deg = cell.alpha_deg;
        rec.atom_outcome = det.atom_outcome;
        rec.origin = det.origin;
        rec.readout_delay = delay;
        log.records.push_back(rec);

        extras_acc += event_extra;
        if (!det.atom_survived) {
            extras_acc += timing.loading_time;
            ++loading_cycles;
        }
        attempts_used = det.attempt_index + 1;
        sim_time = t + event_extra + (det.atom_survived ? 0.0 : timing.loading_time);
    }

    if (config.target_events > 0 && log.records.size() < config.target_events &&
        !detections.empty())
        truncated = true;
    if (config.target_events > 0 && detections.empty()) truncated = true;
    if (config.target_minutes > 0.0) {
        sim_time = std::max(sim_time, config.target_minutes * 60.0);
        attempts_used = std::max<std::uint64_t>(
            attempts_used, static_cast<std::uint64_t>(
                               max_seconds / (attempt_period + cooling_per_attempt)));
    }

    log.summary.attempts = attempts_used;
    log.summary.detections = log.records.size();
    for (const EventRecord& r : log.records) {
        if (r.origin == Origin::signal)
            ++log.summary.signal_events;
        else
            ++log.summary.noise_events;
    }
    log.summary.loading_cycles = loading_cycles;
    log.summary.sim_time_s = sim_time;
    log.summary.truncated = truncated;
    return log;
}

SignalFraction signal_fraction(const EventLog& log) {
    if (log.records.empty()) throw std::domain_error("empty event log");
    std::uint64_t sig = 0, other = 0;
    for (const EventRecord& r : log.records) (r.origin == Origin::signal ? sig : other)++;
    if (other == 0) return {std::numeric_limits<double>::infinity(), true};
    return {static_cast<double>(sig) / static_cast<double>(other), false};
}

}  // namespace qlink::sim
