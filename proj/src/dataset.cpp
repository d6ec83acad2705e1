#include "qlbm/dataset.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "qlbm/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qlbm::ds {

namespace {

constexpr char kMagic[8] = {'Q', 'L', 'B', 'M', 'D', 'A', 'T', 'A'};
constexpr std::uint32_t kVersion = 1;
constexpr int kRecordDoubles = 32;

// A streak this long means the acceptance rate is far below any usable
// configuration (the default settings accept over 99% of draws).
constexpr int kMaxAttempts = 20000;

void append_double_le(std::string& buf, double v) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) buf.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

double read_double_le(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) bits = (bits << 8) | p[b];
    return std::bit_cast<double>(bits);
}

std::uint32_t read_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void flatten(const Sample& s, double* out) {
    out[0] = s.rho;
    out[1] = s.ux;
    out[2] = s.uy;
    out[3] = s.tau;
    out[4] = s.sigma;
    for (int i = 0; i < 9; ++i) {
        out[5 + i] = s.f_pre[i];
        out[14 + i] = s.f_eq[i];
        out[23 + i] = s.f_post[i];
    }
}

Sample unflatten(const double* in) {
    Sample s;
    s.rho = in[0];
    s.ux = in[1];
    s.uy = in[2];
    s.tau = in[3];
    s.sigma = in[4];
    for (int i = 0; i < 9; ++i) {
        s.f_pre[i] = in[5 + i];
        s.f_eq[i] = in[14 + i];
        s.f_post[i] = in[23 + i];
    }
    return s;
}

}  // namespace

void DatasetConfig::validate() const {
    if (!(u_max >= 0.0)) throw std::invalid_argument("dataset config: u_max must be >= 0");
    if (!(rho_min > 0.0)) throw std::invalid_argument("dataset config: rho_min must be > 0");
    if (rho_min > rho_max) throw std::invalid_argument("dataset config: rho_min > rho_max");
    if (!(sigma_min >= 0.0)) throw std::invalid_argument("dataset config: sigma_min must be >= 0");
    if (sigma_min > sigma_max) throw std::invalid_argument("dataset config: sigma_min > sigma_max");
    if (!(tau_min >= 0.5))
        throw std::invalid_argument("dataset config: tau_min below the stable range (tau >= 0.5)");
    if (tau_min > tau_max) throw std::invalid_argument("dataset config: tau_min > tau_max");
    if (n_samples < 1) throw std::invalid_argument("dataset config: n_samples must be >= 1");
    if (n_samples > static_cast<std::int64_t>(UINT32_MAX))
        throw std::invalid_argument("dataset config: n_samples exceeds the file format limit");
}

bool try_generate_sample(std::mt19937_64& gen, const DatasetConfig& cfg, Sample& out) {
    // Draw order is part of the reproducibility contract; keep it fixed.
    std::uniform_real_distribution<double> draw_rho(cfg.rho_min, cfg.rho_max);
    std::uniform_real_distribution<double> draw_u0(0.0, cfg.u_max);
    std::uniform_real_distribution<double> draw_theta(0.0, 2.0 * M_PI);
    std::uniform_real_distribution<double> draw_sigma(cfg.sigma_min, cfg.sigma_max);
    std::uniform_real_distribution<double> draw_tau(cfg.tau_min, cfg.tau_max);

    Sample s;
    s.rho = draw_rho(gen);
    const double u0 = draw_u0(gen);
    const double theta = draw_theta(gen);
    s.ux = u0 * std::cos(theta);
    s.uy = u0 * std::sin(theta);
    s.f_eq = lattice::equilibrium(s.rho, s.ux, s.uy);
    s.sigma = draw_sigma(gen);

    std::normal_distribution<double> noise(0.0, s.sigma);
    lattice::Densities fp{};
    for (int i = 0; i < lattice::Q; ++i) fp[i] = noise(gen);

    // Project the perturbation's density and momentum moments out. The
    // coefficients are lattice constants: the nine directions carry total
    // weight 9 for the density moment and sum(e_ia e_ib) = 6 delta_ab for
    // the momentum one, so this shift zeroes both identically.
    double rho_p = 0.0, mx_p = 0.0, my_p = 0.0;
    for (int i = 0; i < lattice::Q; ++i) {
        rho_p += fp[i];
        mx_p += fp[i] * lattice::EX[i];
        my_p += fp[i] * lattice::EY[i];
    }
    for (int i = 0; i < lattice::Q; ++i) {
        const double fneq = fp[i] - rho_p / 9.0 -
                            (lattice::EX[i] * mx_p + lattice::EY[i] * my_p) / 6.0;
        s.f_pre[i] = s.f_eq[i] + fneq;
    }

    s.tau = draw_tau(gen);
    for (int i = 0; i < lattice::Q; ++i)
        s.f_post[i] = s.f_pre[i] - (s.f_pre[i] - s.f_eq[i]) / s.tau;

    for (int i = 0; i < lattice::Q; ++i)
        if (s.f_eq[i] < 0.0 || s.f_pre[i] < 0.0 || s.f_post[i] < 0.0) return false;

    out = s;
    return true;
}

Sample generate_sample(const DatasetConfig& cfg, std::int64_t index) {
    std::mt19937_64 gen = rng::substream(cfg.seed, static_cast<std::uint64_t>(index));
    Sample s;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt)
        if (try_generate_sample(gen, cfg, s)) return s;
    std::ostringstream msg;
    msg << "dataset: sample " << index << " rejected " << kMaxAttempts
        << " times in a row; the configured ranges make acceptable draws vanishingly rare";
    throw std::runtime_error(msg.str());
}

Dataset generate_dataset(const DatasetConfig& cfg) {
    cfg.validate();
    Dataset data(static_cast<std::size_t>(cfg.n_samples));
    // Rejection aborts must not escape the parallel region; carry the first
    // failure out by index and rethrow after the loop.
    std::int64_t failed_index = -1;
#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < cfg.n_samples; ++k) {
        try {
            data[static_cast<std::size_t>(k)] = generate_sample(cfg, k);
        } catch (const std::runtime_error&) {
#pragma omp critical
            if (failed_index < 0 || k < failed_index) failed_index = k;
        }
    }
    if (failed_index >= 0) generate_sample(cfg, failed_index);  // rethrows with the message
    return data;
}

namespace reference {
Dataset generate_dataset(const DatasetConfig& cfg) {
    cfg.validate();
    Dataset data;
    data.reserve(static_cast<std::size_t>(cfg.n_samples));
    for (std::int64_t k = 0; k < cfg.n_samples; ++k) data.push_back(generate_sample(cfg, k));
    return data;
}
}  // namespace reference

void write_dataset(const std::string& path, const Dataset& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("dataset: cannot open for writing: " + path);

    std::string buf;
    buf.reserve(16 + data.size() * kRecordDoubles * 8);
    buf.append(kMagic, sizeof kMagic);
    for (int b = 0; b < 4; ++b) buf.push_back(static_cast<char>((kVersion >> (8 * b)) & 0xff));
    const std::uint32_t count = static_cast<std::uint32_t>(data.size());
    for (int b = 0; b < 4; ++b) buf.push_back(static_cast<char>((count >> (8 * b)) & 0xff));

    double rec[kRecordDoubles];
    for (const Sample& s : data) {
        flatten(s, rec);
        for (double v : rec) append_double_le(buf, v);
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("dataset: write failed: " + path);
}

Dataset read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("dataset: cannot open: " + path);
    std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw std::runtime_error("dataset: read failed: " + path);

    if (raw.size() < 16)
        throw std::runtime_error("dataset: " + path + ": file too short for a header");
    if (std::memcmp(raw.data(), kMagic, sizeof kMagic) != 0)
        throw std::runtime_error("dataset: " + path + ": bad magic, not a dataset file");
    const auto* bytes = reinterpret_cast<const unsigned char*>(raw.data());
    const std::uint32_t version = read_u32_le(bytes + 8);
    if (version != kVersion)
        throw std::runtime_error("dataset: " + path + ": unsupported format version " +
                                 std::to_string(version));
    const std::uint32_t count = read_u32_le(bytes + 12);

    const std::size_t record_bytes = kRecordDoubles * 8;
    const std::size_t payload = raw.size() - 16;
    if (payload != static_cast<std::size_t>(count) * record_bytes) {
        const std::size_t complete = payload / record_bytes;
        std::ostringstream msg;
        msg << "dataset: " << path << ": header promises " << count << " records but ";
        if (payload % record_bytes != 0)
            msg << "record " << complete << " is truncated";
        else
            msg << "the file holds " << complete;
        throw std::runtime_error(msg.str());
    }

    Dataset data;
    data.reserve(count);
    double rec[kRecordDoubles];
    for (std::uint32_t k = 0; k < count; ++k) {
        const unsigned char* p = bytes + 16 + static_cast<std::size_t>(k) * record_bytes;
        for (int j = 0; j < kRecordDoubles; ++j) rec[j] = read_double_le(p + 8 * j);
        data.push_back(unflatten(rec));
    }
    return data;
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("dataset: cannot open for writing: " + path);
    out << "rho,ux,uy,tau,sigma";
    for (const char* field : {"f_pre", "f_eq", "f_post"})
        for (int i = 0; i < 9; ++i) out << ',' << field << i;
    out << '\n';
    out << std::setprecision(17);
    double rec[kRecordDoubles];
    for (const Sample& s : data) {
        flatten(s, rec);
        for (int j = 0; j < kRecordDoubles; ++j) out << (j ? "," : "") << rec[j];
        out << '\n';
    }
    if (!out) throw std::runtime_error("dataset: write failed: " + path);
}

}  // namespace qlbm::ds
