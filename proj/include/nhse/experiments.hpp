#pragma once

#include <string>
#include <vector>

#include "nhse/config.hpp"
#include "nhse/dynamics.hpp"
#include "nhse/lattice.hpp"
#include "nhse/output.hpp"
#include "nhse/spectral.hpp"

namespace nhse {

/// fig1 fig2 fig3 fig4 fig5 appA appB appC appD_pathA appD_pathB
const std::vector<std::string>& experiment_ids();
bool is_experiment(const std::string& id);

/// Schema with defaults, units and provenance for one experiment. Throws
/// InvalidArgument for an unknown id.
ConfigSchema experiment_schema(const std::string& id);
ExperimentConfig default_config(const std::string& id);

/// Dispatches on config.id().
ExperimentOutput run_experiment(const ExperimentConfig& config);

ExperimentOutput run_fig1(const ExperimentConfig& config);
ExperimentOutput run_fig2(const ExperimentConfig& config);
ExperimentOutput run_fig3(const ExperimentConfig& config);
ExperimentOutput run_fig4(const ExperimentConfig& config);
ExperimentOutput run_fig5(const ExperimentConfig& config);
ExperimentOutput run_appA(const ExperimentConfig& config);
ExperimentOutput run_appB(const ExperimentConfig& config);
ExperimentOutput run_appC(const ExperimentConfig& config);
ExperimentOutput run_appD(const ExperimentConfig& config);

/// Default boundary sweep of the path experiments: 1, eight values log-spaced from
/// 1e-1 to 1e-6, then 0.
std::vector<double> default_path_sweep();

/// Snapshot instants used when dynamics.snapshot_times is empty: 0, 2 and three
/// values log-spaced from 2 to T.
std::vector<double> default_snapshot_times(double T);

}  // namespace nhse
