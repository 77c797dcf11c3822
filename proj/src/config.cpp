#include "qlink/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace qlink::config {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
    for (const auto& [key, _] : obj.items())
        if (!allowed.contains(key))
            throw ConfigError("unknown key '" + key + "' in " + where);
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

qcore::PhotonBasis basis_from_string(const std::string& s) {
    if (s == "HV") return qcore::PhotonBasis::HV;
    if (s == "DA") return qcore::PhotonBasis::DA;
    if (s == "RL") return qcore::PhotonBasis::RL;
    throw ConfigError("unknown photon basis: " + s);
}

std::string basis_to_string(qcore::PhotonBasis b) {
    switch (b) {
        case qcore::PhotonBasis::HV: return "HV";
        case qcore::PhotonBasis::DA: return "DA";
        case qcore::PhotonBasis::RL: return "RL";
    }
    return "?";
}

void parse_link(const json& obj, linkmodel::LinkConfig& link) {
    reject_unknown(obj,
                   {"source_collection", "switch_transmission", "analyzer_transmission",
                    "insertion_loss_slack", "signal_scale", "qfc_enabled", "qfc", "detectors",
                    "fiber", "timing", "decoherence"},
                   "link");
    read(obj, "source_collection", link.source_collection);
    read(obj, "switch_transmission", link.switch_transmission);
    read(obj, "analyzer_transmission", link.analyzer_transmission);
    read(obj, "insertion_loss_slack", link.insertion_loss_slack);
    read(obj, "signal_scale", link.signal_scale);
    read(obj, "qfc_enabled", link.qfc_enabled);

    if (obj.contains("qfc")) {
        const json& q = obj.at("qfc");
        reject_unknown(q,
                       {"eta_int_max", "eta_ext_operating", "eta_nor", "eta_nor_s_arm",
                        "waveguide_length_m", "pump_power_p_arm_w", "pump_power_s_arm_w",
                        "alpha_asr", "passive_losses"},
                       "link.qfc");
        read(q, "eta_int_max", link.qfc.eta_int_max);
        read(q, "eta_ext_operating", link.qfc.eta_ext_operating);
        read(q, "eta_nor", link.qfc.eta_nor);
        read(q, "eta_nor_s_arm", link.qfc.eta_nor_s_arm);
        read(q, "waveguide_length_m", link.qfc.waveguide_length);
        read(q, "pump_power_p_arm_w", link.qfc.pump_power_p_arm);
        read(q, "pump_power_s_arm_w", link.qfc.pump_power_s_arm);
        read(q, "alpha_asr", link.qfc.alpha_asr);
        if (q.contains("passive_losses")) {
            const json& p = q.at("passive_losses");
            reject_unknown(p, {"optics", "fiber_coupling", "waveguide_coupling", "filtering"},
                           "link.qfc.passive_losses");
            read(p, "optics", link.qfc.passive_losses.optics);
            read(p, "fiber_coupling", link.qfc.passive_losses.fiber_coupling);
            read(p, "waveguide_coupling", link.qfc.passive_losses.waveguide_coupling);
            read(p, "filtering", link.qfc.passive_losses.filtering);
        }
    }
    if (obj.contains("detectors")) {
        const json& d = obj.at("detectors");
        reject_unknown(d,
                       {"efficiency_1", "efficiency_2", "dark_rate_cps", "window_s",
                        "window_acceptance"},
                       "link.detectors");
        read(d, "efficiency_1", link.detectors.efficiency_1);
        read(d, "efficiency_2", link.detectors.efficiency_2);
        read(d, "dark_rate_cps", link.detectors.dark_rate);
        read(d, "window_s", link.detectors.window);
        read(d, "window_acceptance", link.detectors.window_acceptance);
    }
    if (obj.contains("fiber")) {
        const json& f = obj.at("fiber");
        reject_unknown(f, {"length_km", "attenuation_db_per_km", "group_index"}, "link.fiber");
        read(f, "length_km", link.fiber.length_km);
        read(f, "attenuation_db_per_km", link.fiber.attenuation_db_per_km);
        read(f, "group_index", link.fiber.group_index);
    }
    if (obj.contains("timing")) {
        const json& t = obj.at("timing");
        reject_unknown(t,
                       {"attempt_overhead_s", "cooling_duration_s", "cooling_every",
                        "loading_time_s", "atom_survival", "readout_extra_delay_s",
                        "event_overhead_s"},
                       "link.timing");
        read(t, "attempt_overhead_s", link.timing.attempt_overhead);
        read(t, "cooling_duration_s", link.timing.cooling_duration);
        read(t, "cooling_every", link.timing.cooling_every);
        read(t, "loading_time_s", link.timing.loading_time);
        read(t, "atom_survival", link.timing.atom_survival);
        read(t, "readout_extra_delay_s", link.timing.readout_extra_delay);
        read(t, "event_overhead_s", link.timing.event_overhead);
    }
    if (obj.contains("decoherence")) {
        const json& d = obj.at("decoherence");
        reject_unknown(d,
                       {"v0_h", "v0_v", "v0_d", "v0_a", "dephasing_time_sensitive_s",
                        "dephasing_time_insensitive_s", "drift_penalty"},
                       "link.decoherence");
        read(d, "v0_h", link.decoherence.v0.h);
        read(d, "v0_v", link.decoherence.v0.v);
        read(d, "v0_d", link.decoherence.v0.d);
        read(d, "v0_a", link.decoherence.v0.a);
        read(d, "dephasing_time_sensitive_s", link.decoherence.dephasing_time_sensitive);
        read(d, "dephasing_time_insensitive_s", link.decoherence.dephasing_time_insensitive);
        read(d, "drift_penalty", link.decoherence.drift_penalty);
    }
}

}  // namespace

Document default_document(linkmodel::ConfigLabel label) {
    Document doc;
    doc.run.link = linkmodel::preset(label);
    doc.run.target_events = 11335;
    doc.run.seed = 42;
    doc.run.apply_defaults();
    return doc;
}

Document parse_document(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config document must be a JSON object");

    reject_unknown(root, {"schema_version", "configuration", "seed", "run", "link", "trap"},
                   "document");

    std::string version = kSchemaVersion;
    read(root, "schema_version", version);
    if (version != kSchemaVersion)
        throw ConfigError("unsupported schema_version: " + version);

    std::string label_str = "A";
    read(root, "configuration", label_str);
    Document doc = default_document(linkmodel::config_label_from_string(label_str));

    read(root, "seed", doc.run.seed);

    if (root.contains("run")) {
        const json& r = root.at("run");
        reject_unknown(r,
                       {"target_events", "target_minutes", "max_sim_minutes", "block_size",
                        "atom_angles_deg", "photon_bases"},
                       "run");
        read(r, "target_events", doc.run.target_events);
        read(r, "target_minutes", doc.run.target_minutes);
        // A duration target replaces the default event target unless both
        // were given explicitly.
        if (r.contains("target_minutes") && doc.run.target_minutes > 0.0 &&
            !r.contains("target_events"))
            doc.run.target_events = 0;
        read(r, "max_sim_minutes", doc.run.max_sim_minutes);
        read(r, "block_size", doc.run.block_size);
        if (r.contains("atom_angles_deg")) {
            doc.run.atom_angles.clear();
            for (const json& a : r.at("atom_angles_deg")) {
                if (a.is_number()) {
                    doc.run.atom_angles.push_back({a.get<double>(), 1});
                } else {
                    reject_unknown(a, {"alpha_deg", "weight"}, "run.atom_angles_deg[]");
                    sim::AngleWeight aw;
                    read(a, "alpha_deg", aw.alpha_deg);
                    read(a, "weight", aw.weight);
                    doc.run.atom_angles.push_back(aw);
                }
            }
        }
        if (r.contains("photon_bases")) {
            doc.run.photon_bases.clear();
            for (const json& b : r.at("photon_bases"))
                doc.run.photon_bases.push_back(basis_from_string(b.get<std::string>()));
        }
    }

    if (root.contains("link")) parse_link(root.at("link"), doc.run.link);

    if (root.contains("trap")) {
        const json& t = root.at("trap");
        reject_unknown(t,
                       {"plateau_visibility", "improved_suppression", "two_photon_contrast",
                        "upgrades"},
                       "trap");
        read(t, "plateau_visibility", doc.trap.plateau_visibility);
        read(t, "improved_suppression", doc.trap.improved_suppression);
        read(t, "two_photon_contrast", doc.trap.two_photon_contrast);
        if (t.contains("upgrades")) {
            const json& u = t.at("upgrades");
            reject_unknown(u, {"detector_efficiency", "remove_mems_switch"}, "trap.upgrades");
            read(u, "detector_efficiency", doc.trap.upgrades.detector_efficiency);
            read(u, "remove_mems_switch", doc.trap.upgrades.remove_mems_switch);
        }
    }

    doc.run.link.validate();
    return doc;
}

Document load_document(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_document(buf.str());
}

std::string serialize_document(const Document& doc) {
    const sim::RunConfig& run = doc.run;
    const linkmodel::LinkConfig& link = run.link;

    json angles = json::array();
    for (const sim::AngleWeight& a : run.atom_angles)
        angles.push_back({{"alpha_deg", a.alpha_deg}, {"weight", a.weight}});
    json bases = json::array();
    for (qcore::PhotonBasis b : run.photon_bases) bases.push_back(basis_to_string(b));

    json root = {
        {"schema_version", doc.schema_version},
        {"configuration", linkmodel::to_string(link.label)},
        {"seed", run.seed},
        {"run",
         {{"target_events", run.target_events},
          {"target_minutes", run.target_minutes},
          {"max_sim_minutes", run.max_sim_minutes},
          {"block_size", run.block_size},
          {"atom_angles_deg", angles},
          {"photon_bases", bases}}},
        {"link",
         {{"source_collection", link.source_collection},
          {"switch_transmission", link.switch_transmission},
          {"analyzer_transmission", link.analyzer_transmission},
          {"insertion_loss_slack", link.insertion_loss_slack},
          {"signal_scale", link.signal_scale},
          {"qfc_enabled", link.qfc_enabled},
          {"qfc",
           {{"eta_int_max", link.qfc.eta_int_max},
            {"eta_ext_operating", link.qfc.eta_ext_operating},
            {"eta_nor", link.qfc.eta_nor},
            {"eta_nor_s_arm", link.qfc.eta_nor_s_arm},
            {"waveguide_length_m", link.qfc.waveguide_length},
            {"pump_power_p_arm_w", link.qfc.pump_power_p_arm},
            {"pump_power_s_arm_w", link.qfc.pump_power_s_arm},
            {"alpha_asr", link.qfc.alpha_asr},
            {"passive_losses",
             {{"optics", link.qfc.passive_losses.optics},
              {"fiber_coupling", link.qfc.passive_losses.fiber_coupling},
              {"waveguide_coupling", link.qfc.passive_losses.waveguide_coupling},
              {"filtering", link.qfc.passive_losses.filtering}}}}},
          {"detectors",
           {{"efficiency_1", link.detectors.efficiency_1},
            {"efficiency_2", link.detectors.efficiency_2},
            {"dark_rate_cps", link.detectors.dark_rate},
            {"window_s", link.detectors.window},
            {"window_acceptance", link.detectors.window_acceptance}}},
          {"fiber",
           {{"length_km", link.fiber.length_km},
            {"attenuation_db_per_km", link.fiber.attenuation_db_per_km},
            {"group_index", link.fiber.group_index}}},
          {"timing",
           {{"attempt_overhead_s", link.timing.attempt_overhead},
            {"cooling_duration_s", link.timing.cooling_duration},
            {"cooling_every", link.timing.cooling_every},
            {"loading_time_s", link.timing.loading_time},
            {"atom_survival", link.timing.atom_survival},
            {"readout_extra_delay_s", link.timing.readout_extra_delay},
            {"event_overhead_s", link.timing.event_overhead}}},
          {"decoherence",
           {{"v0_h", link.decoherence.v0.h},
            {"v0_v", link.decoherence.v0.v},
            {"v0_d", link.decoherence.v0.d},
            {"v0_a", link.decoherence.v0.a},
            {"dephasing_time_sensitive_s", link.decoherence.dephasing_time_sensitive},
            {"dephasing_time_insensitive_s", link.decoherence.dephasing_time_insensitive},
            {"drift_penalty", link.decoherence.drift_penalty}}}}},
        {"trap",
         {{"plateau_visibility", doc.trap.plateau_visibility},
          {"improved_suppression", doc.trap.improved_suppression},
          {"two_photon_contrast", doc.trap.two_photon_contrast},
          {"upgrades",
           {{"detector_efficiency", doc.trap.upgrades.detector_efficiency},
            {"remove_mems_switch", doc.trap.upgrades.remove_mems_switch}}}}}};
    return root.dump(2) + "\n";
}

}  // namespace qlink::config
