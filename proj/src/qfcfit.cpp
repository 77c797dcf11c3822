#include "qlink/qfcfit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qlink::qfcfit {

namespace {

double model_eta(double eta_max, double eta_nor, double length, double p) {
    const double s = std::sin(std::sqrt(std::max(eta_nor * p, 0.0)) * length);
    return eta_max * s * s;
}

}  // namespace

ArmFit fit_efficiency_curve(const std::vector<PowerPoint>& points, double waveguide_length) {
    if (points.size() < 4)
        throw std::domain_error("efficiency fit needs at least 4 data points");
    const double length = waveguide_length;

    // Start values: amplitude from the largest observation, normalized
    // coupling from its power assuming it sits near the first maximum.
    double eta_max = 0.0, p_at_max = 0.0;
    for (const PowerPoint& pt : points)
        if (pt.value > eta_max) {
            eta_max = pt.value;
            p_at_max = pt.pump_power_w;
        }
    if (eta_max <= 0.0 || p_at_max <= 0.0)
        throw std::domain_error("efficiency data must contain positive values");
    const double k = std::numbers::pi / (2.0 * length);
    double eta_nor = k * k / p_at_max;

    Eigen::Vector2d theta(eta_max, eta_nor);
    double lambda = 1e-3;
    int iter = 0;
    for (; iter < 200; ++iter) {
        Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
        Eigen::Vector2d jtr = Eigen::Vector2d::Zero();
        double cost = 0.0;
        for (const PowerPoint& pt : points) {
            const double arg = std::sqrt(std::max(theta(1) * pt.pump_power_w, 0.0)) * length;
            const double s = std::sin(arg), c = std::cos(arg);
            const double f = theta(0) * s * s;
            const double r = pt.value - f;
            Eigen::Vector2d j;
            j(0) = s * s;
            // d/d(eta_nor) of sin^2(L sqrt(eta_nor P)) =
            //   2 sin cos * L * P / (2 sqrt(eta_nor P)) = sin cos L sqrt(P/eta_nor)
            j(1) = theta(1) > 0.0
                       ? theta(0) * s * c * length * std::sqrt(pt.pump_power_w / theta(1))
                       : 0.0;
            jtj += j * j.transpose();
            jtr += j * r;
            cost += r * r;
        }
        Eigen::Matrix2d damped = jtj;
        damped.diagonal() += lambda * jtj.diagonal();
        const Eigen::Vector2d step = damped.ldlt().solve(jtr);
        if (!step.allFinite()) throw std::runtime_error("efficiency fit: singular system");
        Eigen::Vector2d trial = theta + step;
        trial(0) = std::clamp(trial(0), 1e-6, 1.0);
        trial(1) = std::max(trial(1), 1e-6);
        double trial_cost = 0.0;
        for (const PowerPoint& pt : points) {
            const double r = pt.value - model_eta(trial(0), trial(1), length, pt.pump_power_w);
            trial_cost += r * r;
        }
        if (trial_cost <= cost) {
            const double rel =
                (trial - theta).cwiseAbs().maxCoeff() / theta.cwiseAbs().maxCoeff();
            theta = trial;
            lambda = std::max(lambda / 3.0, 1e-12);
            if (rel < 1e-12) break;
        } else {
            lambda *= 10.0;
            if (lambda > 1e12) throw std::runtime_error("efficiency fit did not converge");
        }
    }

    ArmFit fit;
    fit.eta_max = theta(0);
    fit.eta_nor = theta(1);
    fit.peak_power_w = k * k / theta(1);
    double cost = 0.0;
    for (const PowerPoint& pt : points) {
        const double r = pt.value - model_eta(theta(0), theta(1), length, pt.pump_power_w);
        cost += r * r;
    }
    fit.rms_residual = std::sqrt(cost / points.size());
    return fit;
}

QfcFitResult fit_qfc(const QfcFitData& data, double waveguide_length, double eta_int_max) {
    QfcFitResult result;
    result.p_arm = fit_efficiency_curve(data.efficiency_p_arm, waveguide_length);
    if (!data.efficiency_s_arm.empty()) {
        result.has_s_arm = true;
        result.s_arm = fit_efficiency_curve(data.efficiency_s_arm, waveguide_length);
    }

    // Operating point: the weaker arm runs at its peak, the other arm matches
    // that efficiency on the rising edge.
    if (result.has_s_arm) {
        const bool p_weaker = result.p_arm.eta_max <= result.s_arm.eta_max;
        const ArmFit& weak = p_weaker ? result.p_arm : result.s_arm;
        const ArmFit& strong = p_weaker ? result.s_arm : result.p_arm;
        result.operating_efficiency = weak.eta_max;
        const double ratio = std::clamp(weak.eta_max / strong.eta_max, 0.0, 1.0);
        const double arg = std::asin(std::sqrt(ratio));
        const double strong_power =
            (arg / waveguide_length) * (arg / waveguide_length) / strong.eta_nor;
        if (p_weaker) {
            result.operating_power_p_w = weak.peak_power_w;
            result.operating_power_s_w = strong_power;
        } else {
            result.operating_power_p_w = strong_power;
            result.operating_power_s_w = weak.peak_power_w;
        }
    } else {
        result.operating_efficiency = result.p_arm.eta_max;
        result.operating_power_p_w = result.p_arm.peak_power_w;
        result.operating_power_s_w = result.p_arm.peak_power_w;
    }

    if (!data.noise.empty()) {
        if (data.noise.size() < 4)
            throw std::domain_error("noise fit needs at least 4 data points");
        // N(P) = N_dc + alpha * g(P); linear least squares in (N_dc, alpha).
        linkmodel::QfcParams params;
        params.eta_int_max = eta_int_max;
        params.eta_nor = result.p_arm.eta_nor;
        params.eta_nor_s_arm = result.p_arm.eta_nor;
        params.waveguide_length = waveguide_length;
        params.alpha_asr = 1.0;

        double s_gg = 0.0, s_g = 0.0, s_gy = 0.0, s_y = 0.0, n = 0.0;
        for (const PowerPoint& pt : data.noise) {
            const double g = linkmodel::qfc_noise_rate(pt.pump_power_w, params, 0.0);
            s_gg += g * g;
            s_g += g;
            s_gy += g * pt.value;
            s_y += pt.value;
            n += 1.0;
        }
        const double det = n * s_gg - s_g * s_g;
        if (std::abs(det) < 1e-12) throw std::runtime_error("noise fit: degenerate design");
        result.alpha_asr = (n * s_gy - s_g * s_y) / det;
        result.n_dc = (s_y - result.alpha_asr * s_g) / n;
        result.has_noise_fit = true;

        // SNR-optimal pump power: maximize eta(P) / N(P) on a refined grid.
        linkmodel::QfcParams noise_params = params;
        noise_params.alpha_asr = result.alpha_asr;
        const double p_hi = 2.0 * result.p_arm.peak_power_w;
        double best_p = 0.0, best_snr = -1.0;
        for (int i = 1; i <= 4000; ++i) {
            const double p = p_hi * i / 4000.0;
            const double eta =
                model_eta(result.p_arm.eta_max, result.p_arm.eta_nor, waveguide_length, p);
            const double noise = linkmodel::qfc_noise_rate(p, noise_params, result.n_dc);
            const double snr = noise > 0.0 ? eta / noise : 0.0;
            if (snr > best_snr) {
                best_snr = snr;
                best_p = p;
            }
        }
        result.snr_optimal_power_w = best_p;
        result.has_snr_optimum = true;
    }
    return result;
}

}  // namespace qlink::qfcfit
