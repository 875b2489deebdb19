#pragma once

#include <filesystem>
#include <string>

#include "ttomo/tensor.hpp"
#include "ttomo/transforms.hpp"

namespace ttomo {

// Binary fiber-field format: "TTFF", version u32, n u32, mode count i32,
// metric hash u64; then per mode (ascending k): k i32, n*n row-major
// (re, im) float64 pairs. Native little-endian.
void write_field_binary(const std::filesystem::path& p, const FiberFunction& u,
                        std::uint64_t metric_hash);
FiberFunction read_field_binary(const std::filesystem::path& p, GridPtr grid,
                                std::uint64_t* metric_hash = nullptr);

// Column text: x y k re im (one line per node and mode).
void write_field_text(const std::filesystem::path& p, const FiberFunction& u);

// Sinograms: column text "beta alpha re im tag" and a binary variant
// ("TTSG", version, n_beta, n_alpha, tag, values).
void write_sinogram_text(const std::filesystem::path& p, const BoundaryData& d);
void write_sinogram_binary(const std::filesystem::path& p, const BoundaryData& d);
BoundaryData read_sinogram_binary(const std::filesystem::path& p, FanPtr fan);

// Tensor fields: per-component binary grids f_q.bin plus a manifest
// (order, grid, metric hash, component files).
void write_tensor(const std::filesystem::path& dir, const std::string& stem,
                  const SymmetricTensorField& f);
SymmetricTensorField read_tensor(const std::filesystem::path& manifest, const SurfacePtr& s);

// 8-bit PGM renderings (min/max normalized, range recorded in the header
// comment).
void write_pgm(const std::filesystem::path& p, const Grid& g, const Field& f, bool imaginary);

} // namespace ttomo
