#pragma once

#include "ego3d/dataset_io.hpp"
#include "ego3d/run_config.hpp"
#include "ego3d/training.hpp"

namespace toy {

/// Small in-memory toy split with the default run settings.
inline ego3d::TensorDataset tensors(size_t count, uint64_t seed) {
  ego3d::RunConfig run;
  const auto ds = ego3d::generate_dataset(run.sampler(), run.data.sizes, count, seed, "train");
  return ego3d::TensorDataset::from(ds);
}

inline ego3d::ModelConfig model(ego3d::Variant v = ego3d::Variant::full) {
  ego3d::RunConfig run;
  auto c = run.model();
  c.variant = v;
  return c;
}

}  // namespace toy
