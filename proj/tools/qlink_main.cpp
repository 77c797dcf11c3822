#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "qlink/analysis.hpp"
#include "qlink/config.hpp"
#include "qlink/forecast.hpp"
#include "qlink/io.hpp"
#include "qlink/qfcfit.hpp"
#include "qlink/simengine.hpp"
#include "qlink/version.hpp"

namespace {

using namespace qlink;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

config::Document load_or_default(const std::string& config_path) {
    if (config_path.empty()) return config::default_document();
    return config::load_document(config_path);
}

int cmd_simulate(const std::string& config_path, std::uint64_t seed, bool seed_set,
                 std::uint64_t events, bool events_set, const std::string& out_path) {
    config::Document doc = load_or_default(config_path);
    if (seed_set) doc.run.seed = seed;
    if (events_set) {
        doc.run.target_events = events;
        doc.run.target_minutes = 0.0;
    }

    const sim::EventLog log = sim::simulate_run(doc.run);
    io::write_event_log_csv(out_path, log);
    io::write_manifest(out_path, config::serialize_document(doc), log);

    const double minutes = log.summary.sim_time_s / 60.0;
    const double rate = minutes > 0.0 ? log.records.size() / minutes : 0.0;
    const linkmodel::SnrValue snr = linkmodel::snr_model(doc.run.link);
    std::printf("configuration %s  attempts %llu  events %zu  rate %.1f/min  "
                "simulated %.1f min  model SNR %.1f\n",
                linkmodel::to_string(doc.run.link.label).c_str(),
                static_cast<unsigned long long>(log.summary.attempts), log.records.size(),
                rate, minutes, snr.infinite ? INFINITY : snr.value);
    if (log.summary.truncated)
        std::fprintf(stderr, "warning: run truncated before reaching the target\n");
    std::printf("wrote %s and %s.manifest.json\n", out_path.c_str(), out_path.c_str());
    return kExitOk;
}

int cmd_analyze(const std::string& log_path, const std::string& out_base) {
    const sim::EventLog log = io::read_event_log_csv(log_path);
    if (log.records.empty()) {
        std::fprintf(stderr, "error: event log %s contains no events\n", log_path.c_str());
        return kExitRuntime;
    }
    const auto curves = analysis::bin_events(log);
    const analysis::VisibilityReport vis = analysis::visibility_report(curves);
    const analysis::FidelityReport fid = analysis::fidelity_report(log, vis);

    std::string config_hash;
    {
        std::ifstream manifest(log_path + ".manifest.json");
        if (manifest) {
            std::stringstream buf;
            buf << manifest.rdbuf();
            const auto pos = buf.str().find("config_sha256");
            if (pos != std::string::npos) {
                const std::string text = buf.str();
                const auto start = text.find('"', pos + 14);
                const auto end = text.find('"', start + 1);
                if (start != std::string::npos && end != std::string::npos)
                    config_hash = text.substr(start + 1, end - start - 1);
            }
        }
    }

    const std::string table = io::results_table(vis, fid, log);
    std::fputs(table.c_str(), stdout);
    if (!out_base.empty()) {
        io::write_text_file(out_base + ".report.json",
                            io::visibility_report_to_json(vis, fid, config_hash));
        io::write_text_file(out_base + ".fringes.csv", io::curves_to_csv(curves));
        io::write_text_file(out_base + ".table.txt", table);
        std::printf("wrote %s.report.json, %s.fringes.csv, %s.table.txt\n", out_base.c_str(),
                    out_base.c_str(), out_base.c_str());
    }
    return kExitOk;
}

int cmd_forecast(const std::string& config_path, double d_min, double d_max, int points,
                 const std::string& out_path) {
    const config::Document doc = load_or_default(config_path);
    const auto rows = forecast::forecast_sweep(d_min, d_max, points, doc.run.link, doc.trap);

    std::string csv =
        "distance_km,f_ap_current,f_ap_improved,f_aa_current,f_aa_improved,rate_aa_per_min\n";
    char line[256];
    for (const forecast::SweepRow& r : rows) {
        std::snprintf(line, sizeof(line), "%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", r.distance_km,
                      r.f_ap_current, r.f_ap_improved, r.f_aa_current, r.f_aa_improved,
                      r.rate_aa_per_min);
        csv += line;
    }
    if (!out_path.empty()) {
        io::write_text_file(out_path, csv);
        std::printf("wrote %s\n", out_path.c_str());
    } else {
        std::fputs(csv.c_str(), stdout);
    }

    const forecast::TrapModel current = forecast::current_trap(doc.run.link, doc.trap);
    const forecast::TrapModel improved = forecast::improved_trap(doc.run.link, doc.trap);
    std::printf("atom-atom fidelity at 20 km: current %.2f, improved %.2f\n",
                forecast::atom_atom_fidelity_at(20.0, current, doc.run.link),
                forecast::atom_atom_fidelity_at(20.0, improved, doc.run.link));
    return kExitOk;
}

qfcfit::QfcFitData read_fit_data(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open data file: " + path);
    qfcfit::QfcFitData data;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty data file: " + path);
    if (line != "quantity,arm,pump_power_w,value")
        throw std::runtime_error(
            "expected header 'quantity,arm,pump_power_w,value' in " + path);
    std::size_t index = 0;
    while (std::getline(in, line)) {
        ++index;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string quantity, arm, power, value;
        if (!std::getline(ss, quantity, ',') || !std::getline(ss, arm, ',') ||
            !std::getline(ss, power, ',') || !std::getline(ss, value))
            throw std::runtime_error("bad record " + std::to_string(index) + " in " + path);
        const qfcfit::PowerPoint pt{std::stod(power), std::stod(value)};
        if (quantity == "efficiency") {
            if (arm == "p")
                data.efficiency_p_arm.push_back(pt);
            else if (arm == "s")
                data.efficiency_s_arm.push_back(pt);
            else
                throw std::runtime_error("bad record " + std::to_string(index) +
                                         ": unknown arm '" + arm + "'");
        } else if (quantity == "noise_cps") {
            data.noise.push_back(pt);
        } else {
            throw std::runtime_error("bad record " + std::to_string(index) +
                                     ": unknown quantity '" + quantity + "'");
        }
    }
    return data;
}

int cmd_fit_qfc(const std::string& data_path, const std::string& config_path,
                const std::string& out_path) {
    const config::Document doc = load_or_default(config_path);
    const qfcfit::QfcFitData data = read_fit_data(data_path);
    const qfcfit::QfcFitResult fit = qfcfit::fit_qfc(data, doc.run.link.qfc.waveguide_length,
                                                     doc.run.link.qfc.eta_int_max);

    std::printf("p-arm: eta_max %.4f  eta_nor %.1f 1/(W m^2)  peak power %.1f mW\n",
                fit.p_arm.eta_max, fit.p_arm.eta_nor, 1e3 * fit.p_arm.peak_power_w);
    if (fit.has_s_arm)
        std::printf("s-arm: eta_max %.4f  eta_nor %.1f 1/(W m^2)  peak power %.1f mW\n",
                    fit.s_arm.eta_max, fit.s_arm.eta_nor, 1e3 * fit.s_arm.peak_power_w);
    std::printf("operating point: %.1f mW (p) / %.1f mW (s), efficiency %.1f%%\n",
                1e3 * fit.operating_power_p_w, 1e3 * fit.operating_power_s_w,
                1e2 * fit.operating_efficiency);
    if (fit.has_noise_fit)
        std::printf("noise: N_dc %.1f cps  alpha_ASR %.1f counts/(s W m)  "
                    "SNR-optimal power %.1f mW\n",
                    fit.n_dc, fit.alpha_asr, 1e3 * fit.snr_optimal_power_w);

    if (!out_path.empty()) {
        std::ostringstream json;
        json << "{\n";
        json << "  \"p_arm\": {\"eta_max\": " << fit.p_arm.eta_max
             << ", \"eta_nor\": " << fit.p_arm.eta_nor
             << ", \"peak_power_w\": " << fit.p_arm.peak_power_w << "},\n";
        if (fit.has_s_arm)
            json << "  \"s_arm\": {\"eta_max\": " << fit.s_arm.eta_max
                 << ", \"eta_nor\": " << fit.s_arm.eta_nor
                 << ", \"peak_power_w\": " << fit.s_arm.peak_power_w << "},\n";
        json << "  \"operating_power_p_w\": " << fit.operating_power_p_w << ",\n";
        json << "  \"operating_power_s_w\": " << fit.operating_power_s_w << ",\n";
        json << "  \"operating_efficiency\": " << fit.operating_efficiency;
        if (fit.has_noise_fit) {
            json << ",\n  \"n_dc_cps\": " << fit.n_dc;
            json << ",\n  \"alpha_asr\": " << fit.alpha_asr;
            json << ",\n  \"snr_optimal_power_w\": " << fit.snr_optimal_power_w;
        }
        json << "\n}\n";
        io::write_text_file(out_path, json.str());
        std::printf("wrote %s\n", out_path.c_str());
    }
    return kExitOk;
}

int cmd_budget(const std::string& config_path, const std::string& out_path) {
    const config::Document doc = load_or_default(config_path);
    const analysis::BudgetReport budget = analysis::fidelity_budget(doc.run.link);

    std::printf("fidelity budget, configuration %s\n",
                linkmodel::to_string(doc.run.link.label).c_str());
    std::printf("  readout       %5.1f points\n", budget.readout_points);
    std::printf("  decoherence   %5.1f points\n", budget.decoherence_points);
    std::printf("  SNR           %5.1f points\n", budget.snr_points);
    std::printf("  drifts        %5.1f points\n", budget.drift_points);
    std::printf("  achieved      %5.1f %%\n", 100.0 * budget.achieved_fidelity);
    std::printf("  residual      %5.2f points\n", budget.residual_points);
    std::printf("efficiency budget\n");
    std::printf("  detection probability/attempt %.3e\n",
                linkmodel::overall_detection_probability(doc.run.link));
    std::printf("  insertion loss slack          %.3f\n", doc.run.link.insertion_loss_slack);
    if (!out_path.empty()) {
        io::write_text_file(out_path, io::budget_report_to_json(budget, doc.run.link));
        std::printf("wrote %s\n", out_path.c_str());
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qlink: atom-photon entanglement link simulator and analysis toolkit"};
    app.set_version_flag("--version", qlink::kVersion);
    app.require_subcommand(1);

    std::string config_path, out_path, log_path, data_path;
    std::uint64_t seed = 0, events = 0;
    double d_min = 0.1, d_max = 200.0;
    int points = 50;

    CLI::App* simulate = app.add_subcommand("simulate", "generate a Monte-Carlo event log");
    simulate->add_option("--config", config_path, "config JSON path");
    CLI::Option* seed_opt = simulate->add_option("--seed", seed, "RNG seed");
    CLI::Option* events_opt = simulate->add_option("--events", events, "target event count");
    simulate->add_option("--out", out_path, "output CSV path")->required();

    CLI::App* analyze = app.add_subcommand("analyze", "estimate visibilities and CHSH from a log");
    analyze->add_option("--log", log_path, "event log CSV path")->required();
    analyze->add_option("--out", out_path, "output base path (writes .report.json etc.)");

    CLI::App* forecast_cmd = app.add_subcommand("forecast", "fidelity and rate versus distance");
    forecast_cmd->add_option("--config", config_path, "config JSON path");
    forecast_cmd->add_option("--distance-min", d_min, "minimum distance, km");
    forecast_cmd->add_option("--distance-max", d_max, "maximum distance, km");
    forecast_cmd->add_option("--points", points, "grid points");
    forecast_cmd->add_option("--out", out_path, "output CSV path");

    CLI::App* fit = app.add_subcommand("fit-qfc", "fit conversion efficiency and noise models");
    fit->add_option("--data", data_path, "CSV of (quantity,arm,pump_power_w,value)")->required();
    fit->add_option("--config", config_path, "config JSON path");
    fit->add_option("--out", out_path, "output JSON path");

    CLI::App* budget = app.add_subcommand("budget", "itemized fidelity and efficiency budgets");
    budget->add_option("--config", config_path, "config JSON path");
    budget->add_option("--out", out_path, "output JSON path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (simulate->parsed())
            return cmd_simulate(config_path, seed, !seed_opt->empty(), events,
                                !events_opt->empty(), out_path);
        if (analyze->parsed()) return cmd_analyze(log_path, out_path);
        if (forecast_cmd->parsed())
            return cmd_forecast(config_path, d_min, d_max, points, out_path);
        if (fit->parsed()) return cmd_fit_qfc(data_path, config_path, out_path);
        if (budget->parsed()) return cmd_budget(config_path, out_path);
    } catch (const qlink::config::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
    return kExitUsage;
}
