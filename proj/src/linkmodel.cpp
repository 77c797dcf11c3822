#include "qlink/linkmodel.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace qlink::linkmodel {

namespace {

void require(bool ok, const char* msg) {
    if (!ok) throw std::domain_error(msg);
}

double gaussian_decay(double delay, double time_constant) {
    const double x = delay / time_constant;
    return std::exp(-x * x);
}

}  // namespace

void QfcParams::validate() const {
    require(eta_int_max > 0.0 && eta_int_max <= 1.0, "eta_int_max must be in (0, 1]");
    require(eta_ext_operating > 0.0 && eta_ext_operating <= 1.0,
            "eta_ext_operating must be in (0, 1]");
    require(eta_nor > 0.0 && eta_nor_s_arm > 0.0, "eta_nor must be positive (fitted)");
    require(waveguide_length > 0.0, "waveguide_length must be positive");
    require(pump_power_p_arm >= 0.0 && pump_power_s_arm >= 0.0, "pump powers must be >= 0");
    require(alpha_asr >= 0.0, "alpha_asr must be >= 0");
    const PassiveLosses& p = passive_losses;
    for (double f : {p.optics, p.fiber_coupling, p.waveguide_coupling, p.filtering})
        require(f > 0.0 && f <= 1.0, "passive losses must be in (0, 1]");
    // Budget consistency: the passive chain times the internal maximum must
    // reproduce the operating external efficiency to within two points.
    require(p.product() * eta_int_max >= eta_ext_operating - 0.02,
            "passive losses inconsistent with external efficiency");
}

void DetectorParams::validate() const {
    require(efficiency_1 > 0.0 && efficiency_1 <= 1.0, "detector efficiency in (0, 1]");
    require(efficiency_2 > 0.0 && efficiency_2 <= 1.0, "detector efficiency in (0, 1]");
    require(dark_rate >= 0.0, "dark rate must be >= 0");
    require(window > 0.0, "acceptance window must be positive");
    require(window_acceptance > 0.0 && window_acceptance <= 1.0,
            "window acceptance must be in (0, 1]");
}

void FiberParams::validate() const {
    require(length_km >= 0.0, "fiber length must be >= 0");
    require(attenuation_db_per_km > 0.0, "attenuation must be positive");
    require(group_index >= 1.0, "group index must be >= 1");
}

void TimingParams::validate() const {
    require(attempt_overhead >= 0.0 && cooling_duration >= 0.0 && loading_time >= 0.0 &&
                readout_extra_delay >= 0.0 && event_overhead >= 0.0,
            "durations must be >= 0");
    require(cooling_every > 0, "cooling_every must be positive");
    require(atom_survival >= 0.0 && atom_survival <= 1.0, "atom_survival must be in [0, 1]");
}

void DecoherenceParams::validate() const {
    for (double v : {v0.h, v0.v, v0.d, v0.a})
        require(v >= 0.0 && v <= 1.0, "base visibilities must be in [0, 1]");
    require(dephasing_time_sensitive > 0.0 && dephasing_time_insensitive > 0.0,
            "dephasing times must be positive");
    require(dephasing_time_insensitive >= dephasing_time_sensitive,
            "insensitive dephasing time must be >= sensitive time");
    require(drift_penalty > 0.0 && drift_penalty <= 1.0, "drift penalty must be in (0, 1]");
}

void LinkConfig::validate() const {
    qfc.validate();
    detectors.validate();
    fiber.validate();
    timing.validate();
    decoherence.validate();
    for (double f : {source_collection, switch_transmission, analyzer_transmission,
                     insertion_loss_slack, signal_scale})
        require(f > 0.0 && f <= 1.0, "chain factors must be in (0, 1]");
}

std::string to_string(ConfigLabel label) {
    switch (label) {
        case ConfigLabel::A: return "A";
        case ConfigLabel::B: return "B";
        case ConfigLabel::C: return "C";
        case ConfigLabel::D: return "D";
    }
    return "?";
}

ConfigLabel config_label_from_string(const std::string& s) {
    if (s == "A") return ConfigLabel::A;
    if (s == "B") return ConfigLabel::B;
    if (s == "C") return ConfigLabel::C;
    if (s == "D") return ConfigLabel::D;
    throw std::domain_error("unknown configuration label: " + s);
}

double conversion_efficiency(double pump_power_w, const QfcParams& params, bool external) {
    require(pump_power_w >= 0.0, "pump power must be >= 0");
    const double eta_max = external ? params.eta_ext_operating : params.eta_int_max;
    const double s = std::sin(std::sqrt(params.eta_nor * pump_power_w) * params.waveguide_length);
    return eta_max * s * s;
}

double qfc_noise_rate(double pump_power_w, const QfcParams& params, double n_dc) {
    require(pump_power_w >= 0.0, "pump power must be >= 0");
    const double length = params.waveguide_length;
    const double k = std::sqrt(params.eta_nor * pump_power_w);
    // int_0^L sin^2(k u) du = L/2 - sin(2 k L) / (4 k); series below 2kL ~ 1e-4
    // keeps the p -> 0 limit exact.
    double sine_integral;
    if (2.0 * k * length < 1e-4) {
        const double k2 = k * k;
        sine_integral = length / 2.0 - k2 * length * length * length / 3.0 +
                        k2 * k2 * std::pow(length, 5) / 15.0;
    } else {
        sine_integral = length / 2.0 - std::sin(2.0 * k * length) / (4.0 * k);
    }
    const double bracket = length - params.eta_int_max * sine_integral;
    return n_dc + params.alpha_asr * pump_power_w * bracket;
}

double pump_noise_rate(const LinkConfig& config) {
    if (!config.qfc_enabled) return 0.0;
    QfcParams p_arm = config.qfc;
    QfcParams s_arm = config.qfc;
    s_arm.eta_nor = config.qfc.eta_nor_s_arm;
    return qfc_noise_rate(config.qfc.pump_power_p_arm, p_arm, 0.0) +
           qfc_noise_rate(config.qfc.pump_power_s_arm, s_arm, 0.0);
}

double total_noise_rate(const LinkConfig& config) {
    return pump_noise_rate(config) + config.detectors.total_dark_rate();
}

SnrValue snr_model(const LinkConfig& config) {
    const double noise = total_noise_rate(config);
    const double signal = overall_detection_probability(config);
    if (noise <= 0.0) return {std::numeric_limits<double>::infinity(), true};
    return {signal / (noise * config.detectors.window), false};
}

double fiber_transmission(const FiberParams& fiber) {
    return std::pow(10.0, -fiber.attenuation_db_per_km * fiber.length_km / 10.0);
}

double link_latency(const FiberParams& fiber) {
    return fiber.group_index * fiber.length_km * 1000.0 / kSpeedOfLight;
}

double excitation_rate(const LinkConfig& config) {
    const double period = config.timing.attempt_overhead + link_latency(config.fiber) +
                          config.timing.cooling_duration / config.timing.cooling_every;
    return 1.0 / period;
}

double overall_detection_probability(const LinkConfig& config) {
    const double qfc = config.qfc_enabled
                           ? conversion_efficiency(config.qfc.pump_power_p_arm, config.qfc, true)
                           : 1.0;
    return config.source_collection * config.switch_transmission * qfc *
           fiber_transmission(config.fiber) * config.detectors.window_acceptance *
           config.analyzer_transmission * config.detectors.mean_efficiency() *
           config.insertion_loss_slack * config.signal_scale;
}

double readout_delay(const LinkConfig& config) {
    return link_latency(config.fiber) + config.timing.readout_extra_delay;
}

Visibilities decohered_visibilities(const DecoherenceParams& params, double delay) {
    require(delay >= 0.0, "delay must be >= 0");
    const double s = gaussian_decay(delay, params.dephasing_time_sensitive);
    const double i = gaussian_decay(delay, params.dephasing_time_insensitive);
    const double drift = params.drift_penalty;
    return {params.v0.h * s * drift, params.v0.v * i * drift, params.v0.d * s * drift,
            params.v0.a * s * drift};
}

double effective_visibility(double v_true, double snr) {
    require(v_true >= 0.0 && v_true <= 1.0, "visibility must be in [0, 1]");
    if (std::isinf(snr)) return v_true;
    require(snr > 0.0, "snr must be positive");
    return v_true * snr / (snr + 1.0);
}

double default_eta_nor(double waveguide_length, double operating_power) {
    const double k = std::numbers::pi / (2.0 * waveguide_length);
    return k * k / operating_power;
}

namespace {

// Calibration constants that are chosen rather than solved: the sensitive /
// insensitive dephasing times and the configuration-A drift penalty. Together
// with the anchors below they fix the zero-delay visibilities such that the
// itemized fidelity budget lands on (readout ~4, decoherence ~12, SNR ~3,
// drifts ~3) points for configuration A.
constexpr double kDephasingTimeSensitive = 220e-6;
constexpr double kDephasingTimeInsensitive = 2000e-6;
constexpr double kDriftPenaltyA = 0.955;
constexpr double kDetectorEfficiencyApd = 0.55;
constexpr double kAttenuation780 = 3.5;  // dB/km, short patch fiber only

LinkConfig base_config()
{
    LinkConfig cfg;
    cfg.qfc.eta_nor = default_eta_nor(cfg.qfc.waveguide_length, cfg.qfc.pump_power_p_arm);
    cfg.qfc.eta_nor_s_arm = default_eta_nor(cfg.qfc.waveguide_length, cfg.qfc.pump_power_s_arm);

    // Both arms run at their maximum-efficiency point; the detected
    // pump-induced rate anchors the ASR coefficient.
    const double bracket =
        cfg.qfc.waveguide_length * (1.0 - cfg.qfc.eta_int_max / 2.0);
    cfg.qfc.alpha_asr = refdata::kPumpNoiseCpsA /
                        (bracket * (cfg.qfc.pump_power_p_arm + cfg.qfc.pump_power_s_arm));

    cfg.detectors.dark_rate = refdata::kDarkNoiseCpsTelecom / 2.0;

    cfg.fiber.length_km = refdata::kFiberLengthKm[0];
    cfg.timing.attempt_overhead = 1.0 / refdata::kExcitationRateA -
                                  link_latency(cfg.fiber) -
                                  cfg.timing.cooling_duration / cfg.timing.cooling_every;

    cfg.insertion_loss_slack = 1.0;
    cfg.insertion_loss_slack =
        refdata::kDetectionProbabilityA / overall_detection_probability(cfg);
    return cfg;
}

DecoherenceParams calibrated_decoherence(const LinkConfig& config_a)
{
    // Zero-delay visibilities solved from the configuration-A fringe anchors:
    // observed = v0 * decay(delay_A) * dilution_A * drift_A.
    const double delay_a = readout_delay(config_a);
    const double dil_a = snr_model(config_a).value / (snr_model(config_a).value + 1.0);
    const double s = gaussian_decay(delay_a, kDephasingTimeSensitive);
    const double i = gaussian_decay(delay_a, kDephasingTimeInsensitive);
    const auto& anchors = refdata::kStateVisibilitiesA;

    DecoherenceParams dec;
    dec.dephasing_time_sensitive = kDephasingTimeSensitive;
    dec.dephasing_time_insensitive = kDephasingTimeInsensitive;
    dec.drift_penalty = kDriftPenaltyA;
    dec.v0.h = anchors[0] / (s * dil_a * kDriftPenaltyA);
    dec.v0.v = anchors[1] / (i * dil_a * kDriftPenaltyA);
    dec.v0.d = anchors[2] / (s * dil_a * kDriftPenaltyA);
    dec.v0.a = anchors[3] / (s * dil_a * kDriftPenaltyA);
    return dec;
}

}  // namespace

LinkConfig preset(ConfigLabel label) {
    LinkConfig cfg = base_config();
    cfg.label = label;
    cfg.decoherence = calibrated_decoherence(cfg);

    const int idx = static_cast<int>(label);
    cfg.fiber.length_km = refdata::kFiberLengthKm[idx];

    switch (label) {
        case ConfigLabel::A:
            break;
        case ConfigLabel::B:
        case ConfigLabel::C: {
            if (label == ConfigLabel::C) cfg.timing.readout_extra_delay = 50e-6;
            // Per-measurement excitation/collection factor, anchored to the
            // measured SNR (the chain model alone over-predicts it).
            cfg.signal_scale = 1.0;
            cfg.signal_scale = refdata::kMeasuredSnr[idx] / snr_model(cfg).value;
            break;
        }
        case ConfigLabel::D: {
            cfg.timing.readout_extra_delay = 50e-6;
            cfg.qfc_enabled = false;
            cfg.fiber.attenuation_db_per_km = kAttenuation780;
            cfg.detectors.efficiency_1 = kDetectorEfficiencyApd;
            cfg.detectors.efficiency_2 = kDetectorEfficiencyApd;
            // Dark rate of the unconverted detection path, anchored to the
            // measured SNR.
            const double p_det = overall_detection_probability(cfg);
            cfg.detectors.dark_rate =
                p_det / (refdata::kMeasuredSnr[idx] * cfg.detectors.window) / 2.0;
            break;
        }
    }

    // Drift penalty solved so the chain reproduces the measured average
    // visibility of this configuration.
    const double dil = snr_model(cfg).value / (snr_model(cfg).value + 1.0);
    DecoherenceParams no_drift = cfg.decoherence;
    no_drift.drift_penalty = 1.0;
    const double undrifted =
        decohered_visibilities(no_drift, readout_delay(cfg)).average() * dil;
    cfg.decoherence.drift_penalty = refdata::kAvgVisibility[idx] / undrifted;

    cfg.validate();
    return cfg;
}

LinkConfig ideal_config() {
    LinkConfig cfg = base_config();
    cfg.decoherence.v0 = {1.0, 1.0, 1.0, 1.0};
    cfg.decoherence.dephasing_time_sensitive = 1e6;
    cfg.decoherence.dephasing_time_insensitive = 1e6;
    cfg.decoherence.drift_penalty = 1.0;
    cfg.qfc.alpha_asr = 0.0;
    cfg.detectors.dark_rate = 0.0;
    cfg.timing.readout_extra_delay = 0.0;
    return cfg;
}

}  // namespace qlink::linkmodel
