#pragma once

#include "config.hpp"

namespace misciga::cli {

int cmd_fit_rates(const ExperimentConfig& config);
int cmd_misc(const ExperimentConfig& config);
int cmd_mc(const ExperimentConfig& config);
int cmd_convergence(const ExperimentConfig& config);

}  // namespace misciga::cli
