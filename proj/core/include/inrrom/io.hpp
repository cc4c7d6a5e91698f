// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "inrrom/fom.hpp"
#include "inrrom/trainer.hpp"

namespace inrrom {

struct ExportOptions {
  /// Snapshot indices to render; empty means first and last.
  std::vector<std::size_t> snapshots;
  bool error_maps = true;
};

/// Everything one experiment needs, as a single JSON document. Every key is
/// optional; unknown keys are rejected.
struct RunConfig {
  std::string name = "burgers2d";
  std::string dataset = "dataset.bin";
  std::string output_dir = "run";
  FomConfig fom;
  std::vector<double> train_params = default_train_params();
  std::vector<double> test_params = default_test_params();
  ModelConfig model;
  TrainConfig train;
  FineTuneOptions finetune;
  ExportOptions export_options;

  void validate() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string to_json(const RunConfig& cfg, int indent = -1);

std::string to_json(const FomConfig& cfg);
std::string to_json(const ModelConfig& cfg);
std::string to_json(const TrainConfig& cfg);
FomConfig parse_fom_config(const std::string& json_text);
ModelConfig parse_model_config(const std::string& json_text);
TrainConfig parse_train_config(const std::string& json_text);

// --- binary containers ------------------------------------------------------

inline constexpr char kDatasetMagic[8] = {'I', 'N', 'R', 'R', 'O', 'M', '1', '\0'};
inline constexpr char kCheckpointMagic[8] = {'I', 'N', 'R', 'C', 'K', 'P', 'T', '1'};

std::vector<std::uint8_t> encode_dataset(const Dataset& d);
Dataset decode_dataset(std::span<const std::uint8_t> bytes);
void write_dataset(const Dataset& d, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
void write_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// JSON manifest of an encoded checkpoint, for inspection.
std::string checkpoint_manifest(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames it into place.
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

// --- CSV and images ---------------------------------------------------------

/// Per-parameter rows followed by `avg` and `max` summary rows. `source`
/// goes into a leading comment line.
std::string metrics_csv(const Metrics& m, const std::string& source);

struct HeatmapInfo {
  double min = 0.0;
  double max = 0.0;
  double mu = 0.0;
  double t = 0.0;
};

/// RGB triple of the 256-entry colormap.
std::array<std::uint8_t, 3> colormap(std::uint8_t index);

/// Binary PPM of a [ny][nx] field (row 0 at the bottom of the image) and a
/// sidecar `<path>.json` with min, max, mu and t.
HeatmapInfo write_heatmap(std::span<const double> field, std::size_t nx, std::size_t ny,
                          const std::filesystem::path& path, double mu, double t);

}  // namespace inrrom
