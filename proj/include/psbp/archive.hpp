#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "psbp/inference.hpp"
#include "psbp/model.hpp"
#include "psbp/sampler.hpp"

namespace psbp {

// Shortest round-trip decimal form; identical doubles always format to
// identical bytes, so repeated runs produce byte-identical files.
std::string format_double(double v);

std::uint64_t fnv1a64(const std::string& s);

nlohmann::json spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& j);

nlohmann::json theta_to_json(const WeightCoefficients& theta);
WeightCoefficients theta_from_json(const nlohmann::json& j);

// Draw archive layout under dir: manifest.json, model_spec.json, and one
// delimiter-separated numeric table per parameter block in draws/.
void write_draw_archive(const std::string& dir, const ModelSpec& spec,
                        const FitResult& fit, const SamplerConfig& cfg,
                        std::uint64_t config_hash);

struct LoadedFit {
  ModelSpec spec;
  std::vector<PosteriorDraw> draws;
  nlohmann::json manifest;
};

LoadedFit load_draw_archive(const std::string& dir);

// Full chain checkpoint: sampler config, retained draws, and the exact
// state including the generator, so a resumed run finishes bit-identically.
void write_checkpoint(const std::string& path, const ModelSpec& spec,
                      const FitResult& fit, const SamplerConfig& cfg);

struct Checkpoint {
  ModelSpec spec;
  FitResult fit;
  SamplerConfig cfg;
};

Checkpoint read_checkpoint(const std::string& path);

void write_density_table(const std::string& path, const DensityEstimate& d);

}  // namespace psbp
