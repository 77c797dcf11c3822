#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qlink/analysis.hpp"
#include "qlink/config.hpp"
#include "qlink/forecast.hpp"
#include "qlink/io.hpp"
#include "qlink/linkmodel.hpp"
#include "qlink/qcore.hpp"
#include "qlink/simengine.hpp"
#include "qlink/version.hpp"

namespace py = pybind11;
using namespace qlink;

namespace {

linkmodel::LinkConfig config_from_json(const std::string& json_text) {
    return config::parse_document(json_text).run.link;
}

qcore::PhotonBasis basis_of(const std::string& s) {
    if (s == "HV") return qcore::PhotonBasis::HV;
    if (s == "DA") return qcore::PhotonBasis::DA;
    if (s == "RL") return qcore::PhotonBasis::RL;
    throw std::domain_error("unknown basis: " + s);
}

py::dict analyze_log(const sim::EventLog& log) {
    const auto curves = analysis::bin_events(log);
    const analysis::VisibilityReport vis = analysis::visibility_report(curves);
    const analysis::FidelityReport fid = analysis::fidelity_report(log, vis);
    py::dict out;
    py::dict fits;
    for (int i = 0; i < 4; ++i) {
        py::dict f;
        f["visibility"] = vis.fits[i].visibility;
        f["se"] = vis.fits[i].visibility_se;
        f["alpha0_deg"] = vis.fits[i].alpha0_deg;
        fits[analysis::to_string(static_cast<analysis::PhotonState>(i))] = f;
    }
    out["visibilities"] = fits;
    out["v_bar"] = vis.v_bar.value;
    out["v_bar_se"] = vis.v_bar.se;
    out["fidelity_lower_bound"] = fid.fidelity_lower_bound.value;
    out["fidelity_se"] = fid.fidelity_lower_bound.se;
    out["chsh_s"] = fid.chsh_s.value;
    out["chsh_se"] = fid.chsh_s.se;
    out["snr_measured"] = fid.snr_measured;
    out["configuration"] = fid.configuration_label;
    return out;
}

}  // namespace

PYBIND11_MODULE(_qlink, m) {
    m.doc() = "atom-photon entanglement link simulator and analysis toolkit";
    m.attr("__version__") = kVersion;

    // --- quantum core -----------------------------------------------------
    m.def("bell_state_atom_photon",
          [] { return qcore::bell_state_atom_photon().amplitudes(); },
          "Entangled photon-atom state vector, photon (x) atom ordering");
    m.def("werner_2x3",
          [](double v) { return qcore::werner_2x3(v).matrix(); }, py::arg("v"));
    m.def("werner_atom_atom",
          [](double v) { return qcore::werner_atom_atom(v).matrix(); }, py::arg("v"));
    m.def("fidelity_to_bell",
          [](const qcore::Matrix& rho) {
              return qcore::fidelity_to_target(qcore::DensityMatrix(rho),
                                               qcore::bell_state_atom_photon());
          },
          py::arg("rho"));
    m.def("chsh_s",
          [](const qcore::Matrix& rho) { return qcore::chsh_s(qcore::DensityMatrix(rho)); },
          py::arg("rho"));
    m.def("joint_probability",
          [](const qcore::Matrix& rho, const std::string& basis, const std::string& outcome,
             double alpha_deg, const std::string& atom_outcome) {
              const qcore::PhotonSetting ps{basis_of(basis),
                                            outcome == "first" ? qcore::PhotonOutcome::first
                                                               : qcore::PhotonOutcome::second};
              return qcore::joint_probability(
                  qcore::DensityMatrix(rho), ps, {alpha_deg, 0.0},
                  atom_outcome == "dark" ? qcore::AtomOutcome::dark
                                         : qcore::AtomOutcome::ionized);
          },
          py::arg("rho"), py::arg("basis"), py::arg("outcome"), py::arg("alpha_deg"),
          py::arg("atom_outcome"));
    m.def("partial_trace",
          [](const qcore::Matrix& rho, const std::string& keep) {
              return qcore::partial_trace(qcore::DensityMatrix(rho),
                                          keep == "photon" ? qcore::Subsystem::photon
                                                           : qcore::Subsystem::atom)
                  .matrix();
          },
          py::arg("rho"), py::arg("keep"));

    // --- link model ---------------------------------------------------------
    m.def("default_config_json",
          [](const std::string& label) {
              return config::serialize_document(
                  config::default_document(linkmodel::config_label_from_string(label)));
          },
          py::arg("label") = "A", "Calibrated configuration document as JSON text");
    m.def("snr_model", [](const std::string& config_json) {
        return linkmodel::snr_model(config_from_json(config_json)).value;
    });
    m.def("overall_detection_probability", [](const std::string& config_json) {
        return linkmodel::overall_detection_probability(config_from_json(config_json));
    });
    m.def("excitation_rate", [](const std::string& config_json) {
        return linkmodel::excitation_rate(config_from_json(config_json));
    });
    m.def("fiber_transmission", [](double length_km, double attenuation_db_per_km) {
        linkmodel::FiberParams fiber;
        fiber.length_km = length_km;
        fiber.attenuation_db_per_km = attenuation_db_per_km;
        return linkmodel::fiber_transmission(fiber);
    }, py::arg("length_km"), py::arg("attenuation_db_per_km") = 0.21);
    m.def("link_latency", [](double length_km) {
        linkmodel::FiberParams fiber;
        fiber.length_km = length_km;
        return linkmodel::link_latency(fiber);
    }, py::arg("length_km"));
    m.def("conversion_efficiency",
          [](double pump_power_w, const std::string& config_json, bool external) {
              return linkmodel::conversion_efficiency(
                  pump_power_w, config_from_json(config_json).qfc, external);
          },
          py::arg("pump_power_w"), py::arg("config_json"), py::arg("external") = true);
    m.def("effective_visibility", &linkmodel::effective_visibility, py::arg("v_true"),
          py::arg("snr"));

    // --- simulation and analysis -------------------------------------------
    m.def("simulate_to_csv",
          [](const std::string& config_json, const std::string& out_path, int n_threads) {
              const config::Document doc = config::parse_document(config_json);
              const sim::EventLog log = sim::simulate_run(doc.run, n_threads);
              io::write_event_log_csv(out_path, log);
              io::write_manifest(out_path, config::serialize_document(doc), log);
              py::dict summary;
              summary["attempts"] = log.summary.attempts;
              summary["events"] = log.records.size();
              summary["sim_time_s"] = log.summary.sim_time_s;
              summary["truncated"] = log.summary.truncated;
              return summary;
          },
          py::arg("config_json"), py::arg("out_path"), py::arg("n_threads") = 0);
    m.def("simulate_and_analyze",
          [](const std::string& config_json, int n_threads) {
              const config::Document doc = config::parse_document(config_json);
              const sim::EventLog log = sim::simulate_run(doc.run, n_threads);
              py::dict out = analyze_log(log);
              out["events"] = log.records.size();
              out["sim_time_s"] = log.summary.sim_time_s;
              return out;
          },
          py::arg("config_json"), py::arg("n_threads") = 0);
    m.def("analyze_csv",
          [](const std::string& path) { return analyze_log(io::read_event_log_csv(path)); },
          py::arg("path"));
    m.def("fidelity_budget", [](const std::string& config_json) {
        const analysis::BudgetReport b =
            analysis::fidelity_budget(config_from_json(config_json));
        py::dict out;
        out["readout_points"] = b.readout_points;
        out["decoherence_points"] = b.decoherence_points;
        out["snr_points"] = b.snr_points;
        out["drift_points"] = b.drift_points;
        out["achieved_fidelity"] = b.achieved_fidelity;
        out["residual_points"] = b.residual_points;
        return out;
    });

    // --- forecast -------------------------------------------------------------
    m.def("forecast_sweep",
          [](double d_min, double d_max, int points, const std::string& config_json) {
              const config::Document doc = config::parse_document(config_json);
              const auto rows =
                  forecast::forecast_sweep(d_min, d_max, points, doc.run.link, doc.trap);
              py::list out;
              for (const auto& r : rows) {
                  py::dict row;
                  row["distance_km"] = r.distance_km;
                  row["f_ap_current"] = r.f_ap_current;
                  row["f_ap_improved"] = r.f_ap_improved;
                  row["f_aa_current"] = r.f_aa_current;
                  row["f_aa_improved"] = r.f_aa_improved;
                  row["rate_aa_per_min"] = r.rate_aa_per_min;
                  out.append(row);
              }
              return out;
          },
          py::arg("d_min_km"), py::arg("d_max_km"), py::arg("points"),
          py::arg("config_json"));
    m.def("atom_atom_fidelity_at",
          [](double d_km, const std::string& trap, const std::string& config_json) {
              const config::Document doc = config::parse_document(config_json);
              const forecast::TrapModel model =
                  trap == "improved" ? forecast::improved_trap(doc.run.link, doc.trap)
                                     : forecast::current_trap(doc.run.link, doc.trap);
              return forecast::atom_atom_fidelity_at(d_km, model, doc.run.link);
          },
          py::arg("distance_km"), py::arg("trap"), py::arg("config_json"));
    m.def("atom_photon_fidelity_at",
          [](double d_km, const std::string& trap, const std::string& config_json) {
              const config::Document doc = config::parse_document(config_json);
              const forecast::TrapModel model =
                  trap == "improved" ? forecast::improved_trap(doc.run.link, doc.trap)
                                     : forecast::current_trap(doc.run.link, doc.trap);
              return forecast::atom_photon_fidelity_at(d_km, model, doc.run.link);
          },
          py::arg("distance_km"), py::arg("trap"), py::arg("config_json"));
}
