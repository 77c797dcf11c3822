#pragma once

#include <string>

#include "qlink/forecast.hpp"
#include "qlink/simengine.hpp"

// Structured JSON configuration document. Missing keys fall back to the
// calibrated defaults of the selected built-in configuration; unknown keys
// are rejected; serialize(parse(x)) is lossless.
namespace qlink::config {

inline constexpr const char* kSchemaVersion = "1";

struct Document {
    std::string schema_version = kSchemaVersion;
    sim::RunConfig run;
    forecast::TrapParams trap;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Document default_document(linkmodel::ConfigLabel label = linkmodel::ConfigLabel::A);

Document parse_document(const std::string& json_text);
Document load_document(const std::string& path);

// Canonical serialization: every key explicit, stable ordering.
std::string serialize_document(const Document& doc);

}  // namespace qlink::config
