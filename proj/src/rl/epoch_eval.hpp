#pragma once

#include "tabppo/rl.hpp"

namespace tabppo::rl {

/// Fills train accuracy and, when a test set is given, test accuracy and macro-F1.
void finish_epoch(EpochMetrics& m, const model::PolicyValueNet& net, const data::Dataset& train,
                  const data::Dataset* test);

}  // namespace tabppo::rl
