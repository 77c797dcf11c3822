#include "qlink/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <stdexcept>

#include "qlink/rng.hpp"

namespace qlink::analysis {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Binomial weight at the model value; the +1/2 regularizer keeps empty and
// saturated cells at finite weight. Model-based weights avoid the small-count
// bias of weights estimated from the observed fractions.
double point_weight(const CurvePoint& p, double p_model) {
    const double n = static_cast<double>(p.n_total);
    const double floor = 0.5 / (n + 1.0);
    const double f = std::clamp(p_model, floor, 1.0 - floor);
    return n / (f * (1.0 - f));
}

}  // namespace

const char* to_string(PhotonState s) {
    switch (s) {
        case PhotonState::H: return "H";
        case PhotonState::V: return "V";
        case PhotonState::D: return "D";
        case PhotonState::A: return "A";
    }
    return "?";
}

PhotonState photon_state_of(qcore::PhotonBasis basis, qcore::PhotonOutcome outcome) {
    const bool first = outcome == qcore::PhotonOutcome::first;
    if (basis == qcore::PhotonBasis::HV) return first ? PhotonState::H : PhotonState::V;
    if (basis == qcore::PhotonBasis::DA) return first ? PhotonState::D : PhotonState::A;
    throw std::domain_error("R/L events are not analyzed");
}

std::vector<CorrelationCurve> bin_events(const sim::EventLog& log) {
    if (log.records.empty()) return {};
    std::array<std::map<double, CurvePoint>, 4> bins;
    for (const sim::EventRecord& r : log.records) {
        const PhotonState state = photon_state_of(r.photon_basis, r.photon_outcome);
        CurvePoint& pt = bins[static_cast<int>(state)][r.atom_alpha_deg];
        pt.alpha_deg = r.atom_alpha_deg;
        pt.n_total += 1;
        if (r.atom_outcome == qcore::AtomOutcome::dark) pt.n_dark += 1;
    }
    std::vector<CorrelationCurve> curves;
    for (int s = 0; s < 4; ++s) {
        CorrelationCurve curve;
        curve.photon_state = static_cast<PhotonState>(s);
        for (const auto& [alpha, pt] : bins[s]) curve.points.push_back(pt);
        if (!curve.points.empty()) curves.push_back(std::move(curve));
    }
    return curves;
}

FringeFit fit_fringe(const CorrelationCurve& curve) {
    std::set<double> distinct;
    std::uint64_t total = 0;
    for (const CurvePoint& p : curve.points) {
        if (p.n_dark > p.n_total) throw std::domain_error("n_dark exceeds n_total");
        if (p.n_total == 0) continue;
        distinct.insert(p.alpha_deg);
        total += p.n_total;
    }
    if (distinct.size() < 4) throw std::domain_error("need at least 4 distinct angles");
    if (total < 40) throw std::domain_error("need at least 40 counts for a fit");

    std::vector<CurvePoint> pts;
    for (const CurvePoint& p : curve.points)
        if (p.n_total > 0) pts.push_back(p);
    const int n = static_cast<int>(pts.size());

    // Discrete Fourier component at the fixed 180 deg period for the start.
    double mean0 = 0.0, cc = 0.0, ss = 0.0;
    for (const CurvePoint& p : pts) {
        const double f = static_cast<double>(p.n_dark) / static_cast<double>(p.n_total);
        mean0 += f;
        cc += f * std::cos(2.0 * p.alpha_deg * kDegToRad);
        ss += f * std::sin(2.0 * p.alpha_deg * kDegToRad);
    }
    mean0 /= n;
    cc *= 2.0 / n;
    ss *= 2.0 / n;
    double m = std::max(mean0, 1e-6);
    double vis = std::clamp(std::hypot(cc, ss) / m, 0.0, 1.5);
    double alpha0 = 0.5 * std::atan2(ss, cc) / kDegToRad;

    Eigen::Vector3d theta(m, vis, alpha0);
    const auto model = [](const Eigen::Vector3d& th, double alpha) {
        return th(0) * (1.0 + th(1) * std::cos(2.0 * (alpha - th(2)) * kDegToRad));
    };

    // A few reweighting rounds stabilize the model-based weights, then the
    // frozen-weight problem is driven to full convergence.
    std::vector<double> weights(pts.size());
    const auto refresh_weights = [&] {
        for (std::size_t i = 0; i < pts.size(); ++i)
            weights[i] = point_weight(pts[i], model(theta, pts[i].alpha_deg));
    };
    const auto cost_at = [&](const Eigen::Vector3d& th) {
        double cost = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const double f =
                static_cast<double>(pts[i].n_dark) / static_cast<double>(pts[i].n_total);
            const double r = f - model(th, pts[i].alpha_deg);
            cost += weights[i] * r * r;
        }
        return cost;
    };

    int iter = 0;
    for (int round = 0; round < 4; ++round) {
        refresh_weights();
        double lambda = 1e-3;
        for (; iter < 200; ++iter) {
            Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
            Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
            for (std::size_t i = 0; i < pts.size(); ++i) {
                const CurvePoint& p = pts[i];
                const double f =
                    static_cast<double>(p.n_dark) / static_cast<double>(p.n_total);
                const double c = std::cos(2.0 * (p.alpha_deg - theta(2)) * kDegToRad);
                const double s = std::sin(2.0 * (p.alpha_deg - theta(2)) * kDegToRad);
                const double r = f - model(theta, p.alpha_deg);
                Eigen::Vector3d j;
                j << 1.0 + theta(1) * c, theta(0) * c,
                    2.0 * kDegToRad * theta(0) * theta(1) * s;
                jtj += weights[i] * j * j.transpose();
                jtr += weights[i] * j * r;
            }
            Eigen::Matrix3d damped = jtj;
            damped.diagonal() += lambda * jtj.diagonal();
            const Eigen::Vector3d step = damped.ldlt().solve(jtr);
            if (!step.allFinite()) throw std::runtime_error("fringe fit: degenerate design");

            const Eigen::Vector3d trial = theta + step;
            if (cost_at(trial) <= cost_at(theta)) {
                const double rel = step.cwiseAbs().maxCoeff() /
                                   std::max(theta.cwiseAbs().maxCoeff(), 1e-12);
                theta = trial;
                lambda = std::max(lambda / 3.0, 1e-12);
                if (rel < 1e-10) break;
            } else {
                lambda *= 10.0;
                if (lambda > 1e12) throw std::runtime_error("fringe fit did not converge");
            }
        }
        if (iter >= 200)
            throw std::runtime_error("fringe fit did not converge in 200 iterations");
    }

    // Keep the amplitude sign convention positive.
    if (theta(1) < 0.0) {
        theta(1) = -theta(1);
        theta(2) += 90.0;
    }
    theta(2) = std::fmod(theta(2), 180.0);
    if (theta(2) < 0.0) theta(2) += 180.0;

    Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
    for (const CurvePoint& p : pts) {
        const double w = point_weight(p, model(theta, p.alpha_deg));
        const double c = std::cos(2.0 * (p.alpha_deg - theta(2)) * kDegToRad);
        const double s = std::sin(2.0 * (p.alpha_deg - theta(2)) * kDegToRad);
        Eigen::Vector3d j;
        j << 1.0 + theta(1) * c, theta(0) * c, 2.0 * kDegToRad * theta(0) * theta(1) * s;
        jtj += w * j * j.transpose();
    }
    const Eigen::Matrix3d cov = jtj.inverse();

    FringeFit fit;
    fit.mean = theta(0);
    fit.visibility_raw = theta(1);
    fit.visibility = std::clamp(theta(1), 0.0, 1.0);
    fit.visibility_se = std::sqrt(std::max(cov(1, 1), 0.0));
    fit.alpha0_deg = theta(2);
    fit.alpha0_se = std::sqrt(std::max(cov(2, 2), 0.0));
    fit.iterations = iter + 1;
    return fit;
}

double bootstrap_visibility_se(const CorrelationCurve& curve, int resamples,
                               std::uint64_t seed) {
    rng::Stream stream(seed, 0x626f6f74);  // "boot"
    std::vector<double> values;
    values.reserve(resamples);
    for (int r = 0; r < resamples; ++r) {
        CorrelationCurve resampled = curve;
        for (CurvePoint& p : resampled.points) {
            const double f = p.n_total > 0
                                 ? static_cast<double>(p.n_dark) / static_cast<double>(p.n_total)
                                 : 0.0;
            std::uint64_t k = 0;
            for (std::uint64_t i = 0; i < p.n_total; ++i)
                if (stream.uniform() < f) ++k;
            p.n_dark = k;
        }
        values.push_back(fit_fringe(resampled).visibility_raw);
    }
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= values.size();
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    return std::sqrt(var / (values.size() - 1));
}

double average_visibility(double v_h, double v_v, double v_d, double v_a) {
    for (double v : {v_h, v_v, v_d, v_a})
        if (v < 0.0 || v > 1.0) throw std::domain_error("visibility must be in [0, 1]");
    return ((v_h + v_v) / 2.0 + v_d + v_a) / 3.0;
}

double fidelity_lower_bound(double v_bar) {
    if (v_bar < 0.0 || v_bar > 1.0) throw std::domain_error("visibility must be in [0, 1]");
    return 1.0 / 6.0 + 5.0 / 6.0 * v_bar;
}

ValueWithError chsh_from_counts(const sim::EventLog& log) {
    // Correlator cells: (photon basis, atom setting index 0 or 1). The
    // mirror angles 157.5/112.5 carry the same setting; in the D/A basis the
    // pairing flips sign there.
    struct Cell {
        std::uint64_t same = 0;
        std::uint64_t diff = 0;
    };
    Cell cells[2][2];

    const auto setting_of = [](double alpha) -> std::pair<int, bool> {
        // returns (setting index, mirrored)
        if (std::abs(alpha - 22.5) < 1e-9) return {0, false};
        if (std::abs(alpha - 157.5) < 1e-9) return {0, true};
        if (std::abs(alpha - 67.5) < 1e-9) return {1, false};
        if (std::abs(alpha - 112.5) < 1e-9) return {1, true};
        return {-1, false};
    };

    for (const sim::EventRecord& r : log.records) {
        const auto [setting, mirrored] = setting_of(r.atom_alpha_deg);
        if (setting < 0) continue;
        const int basis = r.photon_basis == qcore::PhotonBasis::HV ? 0 : 1;
        bool same = (r.photon_outcome == qcore::PhotonOutcome::first) ==
                    (r.atom_outcome == qcore::AtomOutcome::dark);
        if (mirrored && basis == 1) same = !same;
        (same ? cells[basis][setting].same : cells[basis][setting].diff) += 1;
    }

    double e[2][2], var[2][2];
    for (int b = 0; b < 2; ++b)
        for (int s = 0; s < 2; ++s) {
            const double n = static_cast<double>(cells[b][s].same + cells[b][s].diff);
            if (n == 0.0) {
                throw std::domain_error(
                    std::string("missing CHSH setting combination: photon ") +
                    (b == 0 ? "H/V" : "D/A") + ", atom " +
                    (s == 0 ? "22.5/157.5" : "67.5/112.5") + " deg");
            }
            e[b][s] = (static_cast<double>(cells[b][s].same) -
                       static_cast<double>(cells[b][s].diff)) / n;
            var[b][s] = (1.0 - e[b][s] * e[b][s]) / n;
        }

    ValueWithError out;
    out.value = std::abs(e[0][0] - e[0][1]) + std::abs(e[1][0] + e[1][1]);
    out.se = std::sqrt(var[0][0] + var[0][1] + var[1][0] + var[1][1]);
    return out;
}

VisibilityReport visibility_report(const std::vector<CorrelationCurve>& curves) {
    VisibilityReport report;
    bool have[4] = {false, false, false, false};
    for (const CorrelationCurve& c : curves) {
        const int idx = static_cast<int>(c.photon_state);
        report.fits[idx] = fit_fringe(c);
        have[idx] = true;
    }
    for (int i = 0; i < 4; ++i)
        if (!have[i])
            throw std::domain_error(std::string("no events for photon state ") +
                                    to_string(static_cast<PhotonState>(i)));
    const auto& f = report.fits;
    report.v_bar.value = average_visibility(f[0].visibility, f[1].visibility, f[2].visibility,
                                            f[3].visibility);
    // v_bar = (vh + vv)/6 + (vd + va)/3
    report.v_bar.se = std::sqrt((f[0].visibility_se * f[0].visibility_se +
                                 f[1].visibility_se * f[1].visibility_se) / 36.0 +
                                (f[2].visibility_se * f[2].visibility_se +
                                 f[3].visibility_se * f[3].visibility_se) / 9.0);
    return report;
}

FidelityReport fidelity_report(const sim::EventLog& log, const VisibilityReport& vis) {
    FidelityReport report;
    report.fidelity_lower_bound.value = fidelity_lower_bound(vis.v_bar.value);
    report.fidelity_lower_bound.se = 5.0 / 6.0 * vis.v_bar.se;
    report.chsh_s = chsh_from_counts(log);
    const sim::SignalFraction sf = sim::signal_fraction(log);
    report.snr_measured = sf.value;
    report.configuration_label = linkmodel::to_string(log.config.link.label);
    return report;
}

BudgetReport fidelity_budget(const linkmodel::LinkConfig& config) {
    config.validate();
    const linkmodel::DecoherenceParams& dec = config.decoherence;
    if (dec.v0.average() <= 0.0)
        throw std::domain_error(
            "uncalibrated decoherence parameters: start from a built-in configuration "
            "(A-D) or set link.decoherence.v0_h/v0_v/v0_d/v0_a in the config document");

    const double delay = linkmodel::readout_delay(config);
    const linkmodel::SnrValue snr = linkmodel::snr_model(config);
    const double dilution = snr.infinite ? 1.0 : snr.value / (snr.value + 1.0);

    linkmodel::DecoherenceParams no_drift = dec;
    no_drift.drift_penalty = 1.0;

    const double v_readout = dec.v0.average();
    const double v_decohered = linkmodel::decohered_visibilities(no_drift, delay).average();
    const double v_snr = v_decohered * dilution;
    const double v_drift = v_snr * dec.drift_penalty;

    const double f0 = 1.0;
    const double f1 = fidelity_lower_bound(std::min(v_readout, 1.0));
    const double f2 = fidelity_lower_bound(v_decohered);
    const double f3 = fidelity_lower_bound(v_snr);
    const double f4 = fidelity_lower_bound(v_drift);

    BudgetReport report;
    report.readout_points = 100.0 * (f0 - f1);
    report.decoherence_points = 100.0 * (f1 - f2);
    report.snr_points = 100.0 * (f2 - f3);
    report.drift_points = 100.0 * (f3 - f4);
    report.achieved_fidelity = f4;
    report.residual_points = 100.0 - 100.0 * f4 - report.readout_points -
                             report.decoherence_points - report.snr_points -
                             report.drift_points;
    return report;
}

}  // namespace qlink::analysis
