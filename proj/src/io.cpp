#include "qlink/io.hpp"

#include <array>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "qlink/config.hpp"
#include "qlink/version.hpp"

namespace qlink::io {

namespace {

using nlohmann::json;

// SHA-256 (FIPS 180-4), compact single-shot implementation.
struct Sha256 {
    static constexpr std::array<std::uint32_t, 64> k = {
        0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
        0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
        0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
        0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
        0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
        0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
        0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
        0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
        0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
        0xc67178f2};

    static std::uint32_t rotr(std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

    static std::string digest(const std::string& data) {
        std::array<std::uint32_t, 8> h = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                                          0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
        std::string msg = data;
        const std::uint64_t bit_len = static_cast<std::uint64_t>(msg.size()) * 8;
        msg.push_back('\x80');
        while (msg.size() % 64 != 56) msg.push_back('\0');
        for (int i = 7; i >= 0; --i)
            msg.push_back(static_cast<char>((bit_len >> (8 * i)) & 0xff));

        for (std::size_t chunk = 0; chunk < msg.size(); chunk += 64) {
            std::array<std::uint32_t, 64> w{};
            for (int i = 0; i < 16; ++i)
                w[i] = (static_cast<std::uint8_t>(msg[chunk + 4 * i]) << 24) |
                       (static_cast<std::uint8_t>(msg[chunk + 4 * i + 1]) << 16) |
                       (static_cast<std::uint8_t>(msg[chunk + 4 * i + 2]) << 8) |
                       static_cast<std::uint8_t>(msg[chunk + 4 * i + 3]);
            for (int i = 16; i < 64; ++i) {
                const std::uint32_t s0 =
                    rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
                const std::uint32_t s1 =
                    rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
                w[i] = w[i - 16] + s0 + w[i - 7] + s1;
            }
            auto [a, b, c, d, e, f, g, hh] = h;
            for (int i = 0; i < 64; ++i) {
                const std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
                const std::uint32_t ch = (e & f) ^ (~e & g);
                const std::uint32_t t1 = hh + s1 + ch + k[i] + w[i];
                const std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
                const std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
                const std::uint32_t t2 = s0 + maj;
                hh = g; g = f; f = e; e = d + t1;
                d = c; c = b; b = a; a = t1 + t2;
            }
            h = {h[0] + a, h[1] + b, h[2] + c, h[3] + d,
                 h[4] + e, h[5] + f, h[6] + g, h[7] + hh};
        }
        char out[65];
        for (int i = 0; i < 8; ++i) std::snprintf(out + 8 * i, 9, "%08x", h[i]);
        return std::string(out, 64);
    }
};

std::string format_double(double v, const char* fmt) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

const char* basis_str(qcore::PhotonBasis b) {
    return b == qcore::PhotonBasis::HV ? "HV" : (b == qcore::PhotonBasis::DA ? "DA" : "RL");
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

std::string sha256_hex(const std::string& data) { return Sha256::digest(data); }

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return sha256_hex(buf.str());
}

std::string event_log_to_csv(const sim::EventLog& log) {
    std::string out = kEventLogHeader;
    out += '\n';
    for (const sim::EventRecord& r : log.records) {
        out += std::to_string(r.attempt_index);
        out += ',';
        out += format_double(r.sim_time, "%.9f");
        out += ',';
        out += std::to_string(r.detector);
        out += ',';
        out += basis_str(r.photon_basis);
        out += ',';
        out += r.photon_outcome == qcore::PhotonOutcome::first ? "first" : "second";
        out += ',';
        out += format_double(r.atom_alpha_deg, "%.4f");
        out += ',';
        out += r.atom_outcome == qcore::AtomOutcome::dark ? "dark" : "ionized";
        out += ',';
        out += sim::to_string(r.origin);
        out += ',';
        out += format_double(r.readout_delay, "%.9e");
        out += '\n';
    }
    return out;
}

void write_event_log_csv(const std::string& path, const sim::EventLog& log) {
    write_text_file(path, event_log_to_csv(log));
}

sim::EventLog read_event_log_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open event log: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty event log: " + path);
    if (line != kEventLogHeader)
        throw std::runtime_error("unexpected event log header in " + path);

    sim::EventLog log;
    std::size_t index = 0;
    while (std::getline(in, line)) {
        ++index;
        if (line.empty()) continue;
        const std::vector<std::string> f = split_csv_line(line);
        try {
            if (f.size() != 9) throw std::runtime_error("expected 9 fields");
            sim::EventRecord r;
            r.attempt_index = std::stoull(f[0]);
            r.sim_time = std::stod(f[1]);
            r.detector = std::stoi(f[2]);
            if (f[3] == "HV") r.photon_basis = qcore::PhotonBasis::HV;
            else if (f[3] == "DA") r.photon_basis = qcore::PhotonBasis::DA;
            else throw std::runtime_error("bad basis '" + f[3] + "'");
            if (f[4] == "first") r.photon_outcome = qcore::PhotonOutcome::first;
            else if (f[4] == "second") r.photon_outcome = qcore::PhotonOutcome::second;
            else throw std::runtime_error("bad outcome '" + f[4] + "'");
            r.atom_alpha_deg = std::stod(f[5]);
            if (f[6] == "dark") r.atom_outcome = qcore::AtomOutcome::dark;
            else if (f[6] == "ionized") r.atom_outcome = qcore::AtomOutcome::ionized;
            else throw std::runtime_error("bad atom outcome '" + f[6] + "'");
            if (f[7] == "signal") r.origin = sim::Origin::signal;
            else if (f[7] == "qfc_noise") r.origin = sim::Origin::qfc_noise;
            else if (f[7] == "dark_count") r.origin = sim::Origin::dark_count;
            else throw std::runtime_error("bad origin '" + f[7] + "'");
            r.readout_delay = std::stod(f[8]);
            log.records.push_back(r);
        } catch (const std::exception& e) {
            throw std::runtime_error("bad record " + std::to_string(index) + " in " + path +
                                     ": " + e.what());
        }
    }

    // Config echo from the sidecar manifest, when present.
    std::ifstream manifest(path + ".manifest.json");
    if (manifest) {
        std::stringstream buf;
        buf << manifest.rdbuf();
        try {
            const json m = json::parse(buf.str());
            if (m.contains("config")) {
                const config::Document doc = config::parse_document(m.at("config").dump());
                log.config = doc.run;
            }
        } catch (const std::exception&) {
            // manifest is advisory for reading; a damaged one is ignored
        }
    }
    log.summary.detections = log.records.size();
    for (const sim::EventRecord& r : log.records)
        (r.origin == sim::Origin::signal ? log.summary.signal_events
                                         : log.summary.noise_events)++;
    if (!log.records.empty()) {
        log.summary.attempts = log.records.back().attempt_index + 1;
        log.summary.sim_time_s = log.records.back().sim_time;
    }
    return log;
}

void write_manifest(const std::string& log_path, const std::string& config_json,
                    const sim::EventLog& log) {
    json manifest;
    manifest["schema_version"] = config::kSchemaVersion;
    manifest["code_version"] = kVersion;
    manifest["created_utc"] = utc_timestamp();
    manifest["seed"] = log.config.seed;
    manifest["config"] = json::parse(config_json);
    manifest["config_sha256"] = sha256_hex(config_json);
    manifest["outputs"] = json::array(
        {{{"path", log_path}, {"sha256", sha256_hex(event_log_to_csv(log))}}});
    manifest["summary"] = {{"attempts", log.summary.attempts},
                           {"detections", log.summary.detections},
                           {"signal_events", log.summary.signal_events},
                           {"noise_events", log.summary.noise_events},
                           {"loading_cycles", log.summary.loading_cycles},
                           {"sim_time_s", log.summary.sim_time_s},
                           {"truncated", log.summary.truncated}};
    write_text_file(log_path + ".manifest.json", manifest.dump(2) + "\n");
}

std::string visibility_report_to_json(const analysis::VisibilityReport& vis,
                                      const analysis::FidelityReport& fid,
                                      const std::string& config_hash) {
    const auto fit_json = [](const analysis::FringeFit& f) {
        return json{{"visibility", f.visibility},
                    {"visibility_raw", f.visibility_raw},
                    {"visibility_se", f.visibility_se},
                    {"mean", f.mean},
                    {"alpha0_deg", f.alpha0_deg},
                    {"alpha0_se_deg", f.alpha0_se}};
    };
    json out;
    out["config_sha256"] = config_hash;
    out["visibilities"] = {{"H", fit_json(vis.fits[0])},
                           {"V", fit_json(vis.fits[1])},
                           {"D", fit_json(vis.fits[2])},
                           {"A", fit_json(vis.fits[3])}};
    out["v_bar"] = {{"value", vis.v_bar.value}, {"se", vis.v_bar.se}};
    out["fidelity_lower_bound"] = {{"value", fid.fidelity_lower_bound.value},
                                   {"se", fid.fidelity_lower_bound.se}};
    out["chsh_s"] = {{"value", fid.chsh_s.value}, {"se", fid.chsh_s.se}};
    out["snr_measured"] = std::isinf(fid.snr_measured) ? json(nullptr)
                                                       : json(fid.snr_measured);
    out["configuration"] = fid.configuration_label;
    return out.dump(2) + "\n";
}

std::string budget_report_to_json(const analysis::BudgetReport& budget,
                                  const linkmodel::LinkConfig& config) {
    json out;
    out["configuration"] = linkmodel::to_string(config.label);
    out["items_points"] = {{"readout", budget.readout_points},
                           {"decoherence", budget.decoherence_points},
                           {"snr", budget.snr_points},
                           {"drifts", budget.drift_points}};
    out["achieved_fidelity"] = budget.achieved_fidelity;
    out["residual_points"] = budget.residual_points;
    out["insertion_loss_slack"] = config.insertion_loss_slack;
    return out.dump(2) + "\n";
}

std::string curves_to_csv(const std::vector<analysis::CorrelationCurve>& curves) {
    std::string out = "photon_state,alpha_deg,n_dark,n_total,dark_fraction,se\n";
    for (const analysis::CorrelationCurve& c : curves) {
        for (const analysis::CurvePoint& p : c.points) {
            const double f = p.n_total > 0
                                 ? double(p.n_dark) / double(p.n_total)
                                 : 0.0;
            const double se =
                p.n_total > 0 ? std::sqrt(std::max(f * (1.0 - f), 1e-12) / double(p.n_total))
                              : 0.0;
            out += std::string(analysis::to_string(c.photon_state)) + ',' +
                   format_double(p.alpha_deg, "%.4f") + ',' + std::to_string(p.n_dark) + ',' +
                   std::to_string(p.n_total) + ',' + format_double(f, "%.6f") + ',' +
                   format_double(se, "%.6f") + '\n';
        }
    }
    return out;
}

std::string results_table(const analysis::VisibilityReport& vis,
                          const analysis::FidelityReport& fid, const sim::EventLog& log) {
    std::ostringstream out;
    const linkmodel::LinkConfig& link = log.config.link;
    out << "configuration        " << fid.configuration_label << "\n";
    out << "fiber length         " << format_double(link.fiber.length_km, "%.3f") << " km\n";
    out << "wavelength           " << (link.qfc_enabled ? "1522 nm" : "780 nm") << "\n";
    out << "readout delay        "
        << format_double(linkmodel::readout_delay(link) * 1e6, "%.1f") << " us\n";
    out << "events               " << log.records.size() << "\n";
    out << "visibility H         " << format_double(100 * vis.fits[0].visibility, "%.1f")
        << " +- " << format_double(100 * vis.fits[0].visibility_se, "%.1f") << " %\n";
    out << "visibility V         " << format_double(100 * vis.fits[1].visibility, "%.1f")
        << " +- " << format_double(100 * vis.fits[1].visibility_se, "%.1f") << " %\n";
    out << "visibility D         " << format_double(100 * vis.fits[2].visibility, "%.1f")
        << " +- " << format_double(100 * vis.fits[2].visibility_se, "%.1f") << " %\n";
    out << "visibility A         " << format_double(100 * vis.fits[3].visibility, "%.1f")
        << " +- " << format_double(100 * vis.fits[3].visibility_se, "%.1f") << " %\n";
    out << "average visibility   " << format_double(100 * vis.v_bar.value, "%.1f") << " +- "
        << format_double(100 * vis.v_bar.se, "%.1f") << " %\n";
    out << "fidelity (%)         " << format_double(100 * fid.fidelity_lower_bound.value, "%.1f")
        << " +- " << format_double(100 * fid.fidelity_lower_bound.se, "%.1f") << "\n";
    out << "S (CHSH)             " << format_double(fid.chsh_s.value, "%.2f") << " +- "
        << format_double(fid.chsh_s.se, "%.2f") << "\n";
    out << "SNR                  ";
    if (std::isinf(fid.snr_measured))
        out << "inf\n";
    else
        out << format_double(fid.snr_measured, "%.1f") << "\n";
    return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace qlink::io
