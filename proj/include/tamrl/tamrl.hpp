#pragma once

// Umbrella header: the whole library.

#include "tamrl/numcore/adam.hpp"
#include "tamrl/numcore/errors.hpp"
#include "tamrl/numcore/finite_diff.hpp"
#include "tamrl/numcore/rng.hpp"
#include "tamrl/numcore/tensor.hpp"

#include "tamrl/networks/bilstm.hpp"
#include "tamrl/networks/init.hpp"
#include "tamrl/networks/layers.hpp"
#include "tamrl/networks/lstm.hpp"
#include "tamrl/networks/mlp.hpp"
#include "tamrl/networks/param_ops.hpp"
#include "tamrl/networks/seq_base.hpp"

#include "tamrl/modulation/film.hpp"
#include "tamrl/modulation/generator.hpp"
#include "tamrl/modulation/modulated_base.hpp"
#include "tamrl/modulation/task_encoder.hpp"

#include "tamrl/episode.hpp"
#include "tamrl/io/csv.hpp"
#include "tamrl/io/entity_series.hpp"
#include "tamrl/io/manifest.hpp"
#include "tamrl/io/metrics.hpp"
#include "tamrl/io/results.hpp"
#include "tamrl/io/windows.hpp"
#include "tamrl/synthetic/tasks.hpp"

#include "tamrl/training/checkpoint.hpp"
#include "tamrl/training/loss.hpp"
#include "tamrl/training/model.hpp"
#include "tamrl/training/objective.hpp"
#include "tamrl/training/parallel.hpp"
#include "tamrl/training/trainer.hpp"

#include "tamrl/adaptation/adapt.hpp"
#include "tamrl/adaptation/evaluate.hpp"
#include "tamrl/adaptation/fomaml.hpp"

#include "tamrl/experiment/gradcheck.hpp"
#include "tamrl/experiment/setup.hpp"
#include "tamrl/experiment/suite.hpp"
