#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "nhse/config.hpp"
#include "nhse/table.hpp"

namespace nhse {

struct PlotFile {
  std::string filename;
  std::string svg;
};

/// Everything an experiment produced, before it touches the disk.
struct ExperimentOutput {
  std::string id;
  std::vector<ResultTable> tables;
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
  bool reliable = true;
  std::vector<std::string> unreliable_points;
  /// Built lazily so a plotting failure cannot lose the data.
  std::function<std::vector<PlotFile>()> plots;

  const ResultTable& table(const std::string& name) const;
};

struct WrittenFiles {
  std::filesystem::path directory;
  std::vector<std::string> files;  ///< relative to directory
  std::vector<std::string> plot_errors;
};

std::string sha256_hex(std::string_view data);

/// Writes <outdir>/<id>/<table>.csv, plots/*.svg and manifest.json.
WrittenFiles write_experiment(const ExperimentOutput& output, const ExperimentConfig& config,
                              const std::filesystem::path& outdir, bool with_plots = true);

std::string code_version();

}  // namespace nhse
