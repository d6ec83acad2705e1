#pragma once

// Random pre-/post-collision training data. Each sample draws a base flow
// state (density, velocity magnitude and angle), perturbs the equilibrium
// with Gaussian noise whose density and momentum moments are projected out,
// and relaxes it one BGK step. Samples with any negative density entry are
// rejected and redrawn.
//
// Generation is reproducible regardless of evaluation order: sample k uses
// the (seed, k) substream, so the parallel generator and the serial
// reference produce bit-identical datasets.

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "qlbm/lattice.hpp"

namespace qlbm::ds {

struct DatasetConfig {
    double u_max = 0.1;
    double rho_min = 0.95;
    double rho_max = 1.05;
    double sigma_min = 1e-15;
    double sigma_max = 5e-4;
    double tau_min = 1.0;  // in units of the timestep
    double tau_max = 1.0;
    std::int64_t n_samples = 32;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Sample {
    lattice::Densities f_pre{};
    lattice::Densities f_eq{};
    lattice::Densities f_post{};
    double rho = 0.0;
    double ux = 0.0;
    double uy = 0.0;
    double sigma = 0.0;
    double tau = 0.0;
};

using Dataset = std::vector<Sample>;

// One pass through the sampling pipeline. Returns false when the draw was
// rejected (some density entry came out negative); the generator state has
// advanced either way.
bool try_generate_sample(std::mt19937_64& gen, const DatasetConfig& cfg, Sample& out);

// Accepted sample for one index, looping try_generate_sample on the index's
// substream. Throws if the rejection streak indicates a pathological config.
Sample generate_sample(const DatasetConfig& cfg, std::int64_t index);

// All samples, generated in parallel over indices.
Dataset generate_dataset(const DatasetConfig& cfg);

namespace reference {
// Plain serial loop, kept as the comparison baseline for the parallel path.
Dataset generate_dataset(const DatasetConfig& cfg);
}  // namespace reference

// Binary container: 8-byte magic, u32 version, u32 record count, then per
// record 32 little-endian doubles in the order
// rho, ux, uy, tau, sigma, f_pre[9], f_eq[9], f_post[9].
void write_dataset(const std::string& path, const Dataset& data);
Dataset read_dataset(const std::string& path);

// Same column order as the binary records, one header line, full precision.
void write_dataset_csv(const std::string& path, const Dataset& data);

}  // namespace qlbm::ds
