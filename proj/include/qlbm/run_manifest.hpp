#pragma once

// Per-run provenance record. Every CLI command writes a manifest into its
// run directory before doing real work (status "running") and rewrites it on
// the way out with the outcome and wall clock, so a crash leaves a visible
// half-open record rather than nothing.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace qlbm::manifest {

inline constexpr const char* kToolVersion = "1.0.0";

struct RunManifest {
    std::string command;     // subcommand name
    std::string invocation;  // argv joined verbatim
    std::uint64_t seed = 0;
    std::string version = kToolVersion;
    // Effective configuration after file and flag merging, in echo order.
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<std::string> outputs;  // files this run produced
    std::string started_at;            // ISO 8601 UTC
    std::string finished_at;           // empty while running
    double wall_seconds = 0.0;
    std::string status = "running";    // then "ok" or "failed: reason"
};

// Wall-clock now, "2026-08-16T12:34:56Z".
std::string utc_iso8601();
// Same instant, "20260816-123456", safe inside a directory name.
std::string utc_timestamp_compact();

// Key = value text, one entry per line; config keys are prefixed with
// "config.", outputs listed as repeated "output" keys.
void write_manifest(const std::string& path, const RunManifest& m);

}  // namespace qlbm::manifest
