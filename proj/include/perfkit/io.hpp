// File formats. All text is UTF-8 with LF line endings; numbers are written as
// decimal text with 17 significant digits; NaN and infinity are rejected.
//
//   <dir>/dataset.csv   row,col,mask,t=<t1>,...,t=<tT>   one line per voxel, row-major, 0-based
//   <dir>/dataset.json  nx, ny, exact acquisition times, AIF constants and onset t0
//   <dir>/truth.csv     row,col,block,k_ep1,k_ep2,K_trans1,K_trans2,v_t1,v_t2
//   <dir>/<map>.csv     ny lines of nx cells; empty cell = outside the mask
//   <dir>/samples.csv   draw,voxel,<log-parameters...>,deviance
//   <dir>/globals.csv   draw,tau_eps[,tau_<parameter>...]
//   config JSON         sections model, priors, sampler, noise, phantom

#pragma once

#include "perfkit/dataset.hpp"
#include "perfkit/diagnostics.hpp"
#include "perfkit/phantom.hpp"
#include "perfkit/sampler.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace perfkit {

namespace fs = std::filesystem;

/// Decimal rendering with 17 significant digits.
std::string format_number(double value);

void write_dataset(const Dataset& dataset, const fs::path& dir);
Dataset read_dataset(const fs::path& dir);

void write_truth(const GroundTruth& truth, const fs::path& dir);
GroundTruth read_truth(const fs::path& dir);

/// One scalar field over the nx * ny grid; NaN marks empty cells.
struct MapGrid {
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::vector<double> values;

  bool operator==(const MapGrid& other) const;
};

void write_map(const MapGrid& map, const fs::path& path);
MapGrid read_map(const fs::path& path);

/// Map file stems written by write_maps for a model, without interval files.
std::vector<std::string> map_names(ModelKind model);

/// Writes every parameter, interval, fit-quality and acceptance map of the
/// summary; with a truth, also true_<parameter>.csv maps.
void write_maps(const FitSummary& summary, const GroundTruth* truth, const fs::path& dir);

void write_samples(const SampleStore& store, const fs::path& dir);
SampleStore read_samples(const fs::path& dir);

struct RunConfig {
  FitConfig fit;
  PhantomConfig phantom;
};

/// Parses a configuration document. Omitted entries keep their defaults;
/// unknown keys and out-of-range values raise ConfigError naming the key path.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig read_config(const fs::path& path);

/// Fully resolved configuration, every default materialised.
nlohmann::json config_to_json(const RunConfig& config);

void write_text(const fs::path& path, const std::string& text);

}  // namespace perfkit
