#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qlink/linkmodel.hpp"
#include "qlink/simengine.hpp"

// Estimation pipeline from event logs to the reported quantities: fringe
// fits, visibilities, fidelity bound, CHSH value, uncertainties, and the
// itemized fidelity budget. Estimators are blind to the ground-truth origin
// tags except for the measured signal fraction.
namespace qlink::analysis {

enum class PhotonState { H, V, D, A };

const char* to_string(PhotonState s);
PhotonState photon_state_of(qcore::PhotonBasis basis, qcore::PhotonOutcome outcome);

struct CurvePoint {
    double alpha_deg = 0.0;
    std::uint64_t n_dark = 0;
    std::uint64_t n_total = 0;
};

struct CorrelationCurve {
    PhotonState photon_state = PhotonState::H;
    std::vector<CurvePoint> points;
};

struct FringeFit {
    double visibility = 0.0;      // clipped to [0, 1]
    double visibility_raw = 0.0;  // pre-clip, for diagnostics
    double visibility_se = 0.0;
    double mean = 0.0;
    double alpha0_deg = 0.0;
    double alpha0_se = 0.0;
    int iterations = 0;
};

struct ValueWithError {
    double value = 0.0;
    double se = 0.0;
};

struct VisibilityReport {
    std::array<FringeFit, 4> fits;  // H, V, D, A
    ValueWithError v_bar;
};

struct FidelityReport {
    ValueWithError fidelity_lower_bound;
    ValueWithError chsh_s;
    double snr_measured = 0.0;  // from ground-truth tags; inf when no noise
    std::string configuration_label;
};

// One curve per detected photon state, counts partitioned by (alpha, atom
// outcome). Origin tags are ignored.
std::vector<CorrelationCurve> bin_events(const sim::EventLog& log);

// Weighted least squares of m (1 + V cos(2(alpha - alpha0))) against dark
// fractions; damped Gauss-Newton with analytic Jacobian, fixed 180 deg
// period, binomial weights with a +1/2 regularizer on empty cells.
FringeFit fit_fringe(const CorrelationCurve& curve);

// Seeded nonparametric alternative to the fit-covariance error.
double bootstrap_visibility_se(const CorrelationCurve& curve, int resamples = 1000,
                               std::uint64_t seed = 17);

// ((v_h + v_v)/2 + 2 (v_d + v_a)/2) / 3; the unmeasured third basis is
// assumed equal to D/A.
double average_visibility(double v_h, double v_v, double v_d, double v_a);

// 1/6 + 5/6 v_bar.
double fidelity_lower_bound(double v_bar);

// S from the four empirical correlators at the canonical settings
// (photon H/V & D/A, atom 22.5/157.5 deg & 67.5/112.5 deg); the mirror
// angles fold onto the primary ones (sign-flipped in the D/A basis).
ValueWithError chsh_from_counts(const sim::EventLog& log);

VisibilityReport visibility_report(const std::vector<CorrelationCurve>& curves);
FidelityReport fidelity_report(const sim::EventLog& log, const VisibilityReport& vis);

struct BudgetReport {
    double readout_points = 0.0;
    double decoherence_points = 0.0;
    double snr_points = 0.0;
    double drift_points = 0.0;
    double achieved_fidelity = 0.0;
    double residual_points = 0.0;  // 100 - achieved*100 - sum of items
};

// Itemized fidelity-loss budget: each item is the fidelity with the mechanism
// off minus with it on, ablated in the order readout, decoherence, SNR,
// drifts.
BudgetReport fidelity_budget(const linkmodel::LinkConfig& config);

}  // namespace qlink::analysis
