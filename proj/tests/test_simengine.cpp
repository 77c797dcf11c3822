#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <map>

#include "qlink/analysis.hpp"
#include "qlink/io.hpp"
#include "qlink/simengine.hpp"

using namespace qlink;
using namespace qlink::sim;

namespace {

RunConfig small_run(linkmodel::ConfigLabel label, std::uint64_t events, std::uint64_t seed) {
    RunConfig cfg;
    cfg.link = linkmodel::preset(label);
    cfg.target_events = events;
    cfg.seed = seed;
    cfg.apply_defaults();
    return cfg;
}

}  // namespace

TEST_CASE("correlated state reproduces the target fringe visibilities") {
    const linkmodel::Visibilities targets{0.765, 0.934, 0.756, 0.715};
    const qcore::DensityMatrix rho = correlated_state(targets);

    const auto fringe_visibility = [&](qcore::PhotonBasis basis, qcore::PhotonOutcome outcome) {
        // Fringe extrema sit on the half-degree grid (0/90 for H/V, 45/135
        // for D/A); a fine sweep brackets them to much better than 1e-6.
        double lo = 1.0, hi = 0.0;
        for (int k = 0; k < 720; ++k) {
            const qcore::AtomReadoutSetting setting{k * 0.25, 0.0};
            const qcore::PhotonSetting ps{basis, outcome};
            const double joint =
                joint_probability(rho, ps, setting, qcore::AtomOutcome::dark);
            const double marg =
                joint + joint_probability(rho, ps, setting, qcore::AtomOutcome::ionized);
            const double p = joint / marg;
            lo = std::min(lo, p);
            hi = std::max(hi, p);
        }
        return (hi - lo) / (hi + lo);
    };

    CHECK(fringe_visibility(qcore::PhotonBasis::HV, qcore::PhotonOutcome::first) ==
          doctest::Approx(targets.h).epsilon(1e-6));
    CHECK(fringe_visibility(qcore::PhotonBasis::HV, qcore::PhotonOutcome::second) ==
          doctest::Approx(targets.v).epsilon(1e-6));
    CHECK(fringe_visibility(qcore::PhotonBasis::DA, qcore::PhotonOutcome::first) ==
          doctest::Approx(targets.d).epsilon(1e-6));
    CHECK(fringe_visibility(qcore::PhotonBasis::DA, qcore::PhotonOutcome::second) ==
          doctest::Approx(targets.a).epsilon(1e-6));
}

TEST_CASE("correlated state is a valid state with flat atom marginal") {
    const qcore::DensityMatrix rho = correlated_state({0.765, 0.934, 0.756, 0.715});
    const qcore::DensityMatrix atom = qcore::partial_trace(rho, qcore::Subsystem::atom);
    for (double alpha : {0.0, 45.0, 101.0}) {
        const double p_dark =
            (atom.matrix() * qcore::dark_state_projector({alpha, 0.0})).trace().real();
        CHECK(p_dark == doctest::Approx(0.5).epsilon(1e-10));
    }
    // Perfect-visibility and zero-visibility corners are reachable.
    CHECK_NOTHROW(correlated_state({1.0, 1.0, 1.0, 1.0}));
    CHECK_NOTHROW(correlated_state({0.0, 0.0, 0.0, 0.0}));
}

TEST_CASE("simulate_run is deterministic and ordered") {
    const RunConfig cfg = small_run(linkmodel::ConfigLabel::A, 400, 7);
    const EventLog log1 = simulate_run(cfg, 1);
    const EventLog log2 = simulate_run(cfg, 4);
    REQUIRE(log1.records.size() == 400);
    CHECK(io::event_log_to_csv(log1) == io::event_log_to_csv(log2));

    double last_time = -1.0;
    std::uint64_t last_attempt = 0;
    for (const EventRecord& r : log1.records) {
        CHECK(r.sim_time > last_time);
        CHECK(r.attempt_index >= last_attempt);
        last_time = r.sim_time;
        last_attempt = r.attempt_index;
    }

    RunConfig different_seed = cfg;
    different_seed.seed = 8;
    CHECK(io::event_log_to_csv(simulate_run(different_seed, 1)) != io::event_log_to_csv(log1));
}

TEST_CASE("QLINK_THREADS only affects scheduling, never the log") {
    const RunConfig cfg = small_run(linkmodel::ConfigLabel::A, 300, 31);
    const std::string reference = io::event_log_to_csv(simulate_run(cfg, 2));
    setenv("QLINK_THREADS", "5", 1);
    const std::string via_env = io::event_log_to_csv(simulate_run(cfg, 0));
    unsetenv("QLINK_THREADS");
    CHECK(via_env == reference);
}

TEST_CASE("detections per attempt match the chain probability") {
    const RunConfig cfg = small_run(linkmodel::ConfigLabel::A, 4000, 21);
    const EventLog log = simulate_run(cfg);
    const double p_signal = linkmodel::overall_detection_probability(cfg.link);
    const double p_noise =
        linkmodel::total_noise_rate(cfg.link) * cfg.link.detectors.window;
    const double p_any = 1.0 - (1.0 - p_signal) * (1.0 - p_noise);
    const double n = static_cast<double>(log.summary.attempts);
    const double expected = n * p_any;
    const double sigma = std::sqrt(n * p_any * (1.0 - p_any));
    CHECK(std::abs(static_cast<double>(log.summary.detections) - expected) < 5.0 * sigma);
}

TEST_CASE("signal fraction approaches the model SNR") {
    const RunConfig cfg = small_run(linkmodel::ConfigLabel::A, 6000, 3);
    const EventLog log = simulate_run(cfg);
    const SignalFraction sf = signal_fraction(log);
    REQUIRE_FALSE(sf.infinite);
    const double snr = linkmodel::snr_model(cfg.link).value;
    const double noise_events = static_cast<double>(log.summary.noise_events);
    const double sigma = snr / std::sqrt(noise_events);  // Poisson-dominated
    CHECK(std::abs(sf.value - snr) < 3.0 * sigma);

    // All-signal log: infinity sentinel.
    RunConfig clean = cfg;
    clean.target_events = 50;
    clean.link.qfc.alpha_asr = 0.0;
    clean.link.detectors.dark_rate = 0.0;
    const SignalFraction clean_sf = signal_fraction(simulate_run(clean));
    CHECK(clean_sf.infinite);
}

TEST_CASE("configuration D logs are nearly noise free") {
    const RunConfig cfg = small_run(linkmodel::ConfigLabel::D, 3000, 5);
    const EventLog log = simulate_run(cfg);
    const SignalFraction sf = signal_fraction(log);
    if (!sf.infinite) CHECK(sf.value > 100.0);
}

TEST_CASE("noiseless ideal run gives perfect correlations") {
    RunConfig cfg;
    cfg.link = linkmodel::ideal_config();
    cfg.target_events = 3000;
    cfg.seed = 11;
    cfg.apply_defaults();
    const EventLog log = simulate_run(cfg);

    // Every signal event at a fringe extremum agrees with the pure state.
    const auto curves = analysis::bin_events(log);
    REQUIRE(curves.size() == 4);
    for (const auto& curve : curves) {
        const auto fit = analysis::fit_fringe(curve);
        CHECK(fit.visibility > 0.99);
    }
}

TEST_CASE("empirical cell frequencies match the quantum model") {
    // Oracle equivalence: per-cell dark fractions of signal-tagged events
    // against joint_probability, within 4 sigma at >= 1e4 events.
    const RunConfig cfg = small_run(linkmodel::ConfigLabel::A, 20000, 13);
    const EventLog log = simulate_run(cfg);

    const linkmodel::Visibilities vis = linkmodel::decohered_visibilities(
        cfg.link.decoherence, linkmodel::readout_delay(cfg.link));
    const qcore::DensityMatrix rho = correlated_state(vis);

    struct Counts {
        std::uint64_t dark = 0, total = 0;
    };
    std::map<std::tuple<int, int, double>, Counts> cells;
    for (const EventRecord& r : log.records) {
        if (r.origin != Origin::signal) continue;
        auto& c = cells[{static_cast<int>(r.photon_basis),
                         static_cast<int>(r.photon_outcome), r.atom_alpha_deg}];
        c.total++;
        if (r.atom_outcome == qcore::AtomOutcome::dark) c.dark++;
    }
    REQUIRE(cells.size() == 32);
    int far_cells = 0;
    for (const auto& [key, counts] : cells) {
        const auto [basis, outcome, alpha] = key;
        const qcore::PhotonSetting ps{static_cast<qcore::PhotonBasis>(basis),
                                      static_cast<qcore::PhotonOutcome>(outcome)};
        const qcore::AtomReadoutSetting as{alpha, 0.0};
        const double joint = joint_probability(rho, ps, as, qcore::AtomOutcome::dark);
        const double marg =
            joint + joint_probability(rho, ps, as, qcore::AtomOutcome::ionized);
        const double expected = joint / marg;
        const double n = static_cast<double>(counts.total);
        const double sigma = std::sqrt(std::max(expected * (1.0 - expected), 1e-6) / n);
        const double z = (static_cast<double>(counts.dark) / n - expected) / sigma;
        if (std::abs(z) > 4.0) ++far_cells;
    }
    CHECK(far_cells == 0);
}

TEST_CASE("noise events carry no angle dependence") {
    RunConfig cfg = small_run(linkmodel::ConfigLabel::A, 20000, 17);
    cfg.link.signal_scale = 0.05;  // boost the noise fraction for statistics
    const EventLog log = simulate_run(cfg);

    EventLog noise_only;
    noise_only.config = log.config;
    for (const EventRecord& r : log.records)
        if (r.origin != Origin::signal) noise_only.records.push_back(r);
    REQUIRE(noise_only.records.size() > 2000);

    for (const auto& curve : analysis::bin_events(noise_only)) {
        const auto fit = analysis::fit_fringe(curve);
        CHECK(fit.visibility_raw < 3.0 * fit.visibility_se);
    }
}

TEST_CASE("event rate and duration for the 20 km configuration") {
    const RunConfig cfg = small_run(linkmodel::ConfigLabel::A, 4000, 19);
    const EventLog log = simulate_run(cfg);
    const double minutes = log.summary.sim_time_s / 60.0;
    const double rate = log.records.size() / minutes;
    CHECK(rate > 35.0 * 0.8);
    CHECK(rate < 35.0 * 1.2);
}

TEST_CASE("unreachable target truncates with a flag") {
    RunConfig cfg = small_run(linkmodel::ConfigLabel::A, 100000, 23);
    cfg.max_sim_minutes = 0.2;
    const EventLog log = simulate_run(cfg);
    CHECK(log.summary.truncated);
    CHECK(log.records.size() < 100000);
    CHECK(log.summary.sim_time_s <= 0.2 * 60.0 + 5.0);
}

TEST_CASE("duration-targeted runs stop on time") {
    RunConfig cfg;
    cfg.link = linkmodel::preset(linkmodel::ConfigLabel::A);
    cfg.target_events = 0;
    cfg.target_minutes = 1.0;
    cfg.seed = 29;
    const EventLog log = simulate_run(cfg);
    CHECK_FALSE(log.summary.truncated);
    CHECK(log.summary.sim_time_s == doctest::Approx(60.0).epsilon(0.1));
    CHECK(log.records.size() > 10);
}

TEST_CASE("run config validation") {
    RunConfig cfg;
    cfg.link = linkmodel::preset(linkmodel::ConfigLabel::A);
    CHECK_THROWS_AS(cfg.validate(), std::domain_error);  // no target
    cfg.target_events = 10;
    cfg.apply_defaults();
    CHECK_NOTHROW(cfg.validate());
    cfg.photon_bases = {qcore::PhotonBasis::RL};
    CHECK_THROWS_AS(cfg.validate(), std::domain_error);
}
