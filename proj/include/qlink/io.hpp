#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qlink/analysis.hpp"
#include "qlink/simengine.hpp"

// Event-log CSV, sidecar run manifest, and report serialization. The CSV is
// deterministic byte for byte for a given config and seed; wall-clock
// metadata lives only in the manifest.
namespace qlink::io {

std::string sha256_hex(const std::string& data);
std::string sha256_file(const std::string& path);

inline constexpr const char* kEventLogHeader =
    "attempt_index,sim_time_s,detector,photon_basis,photon_outcome,atom_alpha_deg,"
    "atom_outcome,origin,readout_delay_s";

std::string event_log_to_csv(const sim::EventLog& log);
void write_event_log_csv(const std::string& path, const sim::EventLog& log);

// Parses records; the config echo comes from the sidecar manifest when
// present (path + ".manifest.json"). Errors carry the 1-based record index.
sim::EventLog read_event_log_csv(const std::string& path);

// Sidecar manifest: config echo + hash, seed, code version, output hashes,
// run summary, wall-clock metadata.
void write_manifest(const std::string& log_path, const std::string& config_json,
                    const sim::EventLog& log);

std::string visibility_report_to_json(const analysis::VisibilityReport& vis,
                                      const analysis::FidelityReport& fid,
                                      const std::string& config_hash);

std::string budget_report_to_json(const analysis::BudgetReport& budget,
                                  const linkmodel::LinkConfig& config);

// Fig-3b style fringe data: alpha, dark fraction, binomial error per state.
std::string curves_to_csv(const std::vector<analysis::CorrelationCurve>& curves);

// Human-readable single-configuration results table.
std::string results_table(const analysis::VisibilityReport& vis,
                          const analysis::FidelityReport& fid, const sim::EventLog& log);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace qlink::io
