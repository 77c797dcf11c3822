#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "qlink/qfcfit.hpp"
#include "qlink/rng.hpp"

using namespace qlink::qfcfit;
using qlink::linkmodel::QfcParams;

namespace {

std::vector<PowerPoint> synthetic_efficiency(double eta_max, double eta_nor, double length,
                                             double noise_frac, std::uint64_t seed) {
    qlink::rng::Stream stream(seed, 0);
    std::vector<PowerPoint> pts;
    for (int i = 1; i <= 14; ++i) {
        const double p = 0.35 * i / 14.0;
        const double s = std::sin(std::sqrt(eta_nor * p) * length);
        const double eta = eta_max * s * s;
        const double wobble = 1.0 + noise_frac * (2.0 * stream.uniform() - 1.0);
        pts.push_back({p, eta * wobble});
    }
    return pts;
}

}  // namespace

TEST_CASE("efficiency fit round trip within 3 percent") {
    const double length = 0.040;
    const double eta_nor_true = qlink::linkmodel::default_eta_nor(length, 0.175);
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const auto pts = synthetic_efficiency(0.57, eta_nor_true, length, 0.01, seed);
        const ArmFit fit = fit_efficiency_curve(pts, length);
        CHECK(std::abs(fit.eta_max - 0.57) / 0.57 < 0.03);
        CHECK(std::abs(fit.eta_nor - eta_nor_true) / eta_nor_true < 0.03);
        CHECK(std::abs(fit.peak_power_w - 0.175) / 0.175 < 0.03);
    }
}

TEST_CASE("noise fit recovers alpha_asr and n_dc within 5 percent") {
    const double length = 0.040;
    QfcParams truth;
    truth.eta_nor = qlink::linkmodel::default_eta_nor(length, 0.175);
    truth.eta_nor_s_arm = truth.eta_nor;
    truth.alpha_asr = 17000.0;
    truth.waveguide_length = length;

    qlink::rng::Stream stream(11, 0);
    QfcFitData data;
    data.efficiency_p_arm = synthetic_efficiency(0.57, truth.eta_nor, length, 0.005, 4);
    for (int i = 0; i <= 12; ++i) {
        const double p = 0.40 * i / 12.0;
        const double n = qlink::linkmodel::qfc_noise_rate(p, truth, 123.0);
        const double wobble = 1.0 + 0.01 * (2.0 * stream.uniform() - 1.0);
        data.noise.push_back({p, n * wobble});
    }

    const QfcFitResult fit = fit_qfc(data, length);
    REQUIRE(fit.has_noise_fit);
    CHECK(std::abs(fit.alpha_asr - truth.alpha_asr) / truth.alpha_asr < 0.05);
    CHECK(std::abs(fit.n_dc - 123.0) / 123.0 < 0.05);

    // Up-conversion of the generated noise removes about half the linear ASR
    // term at the peak-efficiency power.
    const double linear = fit.alpha_asr * 0.175 * length;
    QfcParams fitted = truth;
    fitted.alpha_asr = fit.alpha_asr;
    const double at_peak = qlink::linkmodel::qfc_noise_rate(0.175, fitted, 0.0);
    CHECK(at_peak / linear == doctest::Approx(0.5175).epsilon(0.01));

    CHECK(fit.has_snr_optimum);
    // A slight SNR gain is available below the maximum-efficiency power.
    CHECK(fit.snr_optimal_power_w < 0.175);
    CHECK(fit.snr_optimal_power_w > 0.04);
}

TEST_CASE("two-arm operating point: equal efficiencies, one maximal") {
    const double length = 0.040;
    QfcFitData data;
    data.efficiency_p_arm = synthetic_efficiency(
        0.570, qlink::linkmodel::default_eta_nor(length, 0.175), length, 0.0, 5);
    data.efficiency_s_arm = synthetic_efficiency(
        0.585, qlink::linkmodel::default_eta_nor(length, 0.189), length, 0.0, 6);

    const QfcFitResult fit = fit_qfc(data, length);
    REQUIRE(fit.has_s_arm);
    // The weaker (p) arm runs at its own peak.
    CHECK(fit.operating_power_p_w == doctest::Approx(0.175).epsilon(1e-3));
    CHECK(fit.operating_efficiency == doctest::Approx(0.570).epsilon(1e-3));
    // The stronger arm matches that efficiency below its peak.
    const double eta_s = 0.585 * std::pow(std::sin(std::sqrt(qlink::linkmodel::default_eta_nor(
                                                       length, 0.189) *
                                                   fit.operating_power_s_w) *
                                          length),
                                          2);
    CHECK(eta_s == doctest::Approx(0.570).epsilon(1e-3));
    CHECK(fit.operating_power_s_w < 0.189);
}

TEST_CASE("too few points is an error") {
    std::vector<PowerPoint> pts = {{0.05, 0.2}, {0.1, 0.4}, {0.15, 0.5}};
    CHECK_THROWS_AS(fit_efficiency_curve(pts, 0.040), std::domain_error);
}
