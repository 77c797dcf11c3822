#pragma once

#include <utility>
#include <vector>

#include "qlink/linkmodel.hpp"

// Fits of the pump-power dependent conversion-efficiency and noise models to
// measured (power, value) points, plus the derived operating points.
namespace qlink::qfcfit {

struct PowerPoint {
    double pump_power_w = 0.0;
    double value = 0.0;  // efficiency (dimensionless) or noise rate (cps)
};

struct QfcFitData {
    std::vector<PowerPoint> efficiency_p_arm;
    std::vector<PowerPoint> efficiency_s_arm;  // optional
    std::vector<PowerPoint> noise;             // optional, total over detectors
};

struct ArmFit {
    double eta_max = 0.0;
    double eta_nor = 0.0;  // 1/(W m^2)
    double peak_power_w = 0.0;
    double rms_residual = 0.0;
};

struct QfcFitResult {
    ArmFit p_arm;
    bool has_s_arm = false;
    ArmFit s_arm;

    bool has_noise_fit = false;
    double n_dc = 0.0;       // cps
    double alpha_asr = 0.0;  // counts/(s W m)

    // Powers at which both arm efficiencies are equal and one is maximal.
    double operating_power_p_w = 0.0;
    double operating_power_s_w = 0.0;
    double operating_efficiency = 0.0;

    bool has_snr_optimum = false;
    double snr_optimal_power_w = 0.0;
};

// eta(P) = eta_max sin^2(sqrt(eta_nor P) L): damped Gauss-Newton, analytic
// Jacobian. Requires >= 4 points.
ArmFit fit_efficiency_curve(const std::vector<PowerPoint>& points, double waveguide_length);

// Noise model linear in (N_dc, alpha_ASR) once the conversion parameters are
// known; eta from the p-arm fit.
QfcFitResult fit_qfc(const QfcFitData& data, double waveguide_length,
                     double eta_int_max = 0.965);

}  // namespace qlink::qfcfit
