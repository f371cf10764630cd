#pragma once

#include <string>
#include <vector>

#include "udsgd/config.hpp"

namespace udsgd::experiments {

// Executes one experiment description end to end and writes its CSV
// artifacts under cfg.out_dir. Every file starts with a comment line
// recording the config hash and seed, then a header row naming the columns;
// doubles are printed with %.17g so reruns are byte-identical.
struct Outcome {
  std::vector<std::string> files;  // paths written, in emission order
  std::string summary;             // human-readable result table
};

Outcome run_experiment(const config::ExperimentConfig& cfg);

// Schedule and mixing diagnostics for the configured system (no ensembles):
// step/interval interplay flags plus the estimated mixing contraction.
Outcome run_diagnostics(const config::ExperimentConfig& cfg);

}  // namespace udsgd::experiments
