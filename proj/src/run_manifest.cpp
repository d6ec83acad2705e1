#include "qlbm/run_manifest.hpp"

#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace qlbm::manifest {

namespace {

std::tm utc_now_tm() {
    const std::time_t now = std::time(nullptr);
    std::tm parts{};
    gmtime_r(&now, &parts);
    return parts;
}

std::string format_utc(const char* fmt) {
    const std::tm parts = utc_now_tm();
    std::ostringstream out;
    out << std::put_time(&parts, fmt);
    return out.str();
}

}  // namespace

std::string utc_iso8601() { return format_utc("%Y-%m-%dT%H:%M:%SZ"); }

std::string utc_timestamp_compact() { return format_utc("%Y%m%d-%H%M%S"); }

void write_manifest(const std::string& path, const RunManifest& m) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << std::setprecision(17);
    out << "command = " << m.command << '\n';
    out << "invocation = " << m.invocation << '\n';
    out << "seed = " << m.seed << '\n';
    out << "version = " << m.version << '\n';
    out << "started_at = " << m.started_at << '\n';
    out << "finished_at = " << m.finished_at << '\n';
    out << "wall_seconds = " << m.wall_seconds << '\n';
    out << "status = " << m.status << '\n';
    for (const auto& [key, value] : m.config) out << "config." << key << " = " << value << '\n';
    for (const std::string& o : m.outputs) out << "output = " << o << '\n';
    if (!out.good()) throw std::runtime_error("failed writing " + path);
}

}  // namespace qlbm::manifest
