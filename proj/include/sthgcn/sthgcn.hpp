#pragma once

// Umbrella header.

#include "sthgcn/error.hpp"
#include "sthgcn/log.hpp"

#include "sthgcn/ad/ops.hpp"
#include "sthgcn/ad/tape.hpp"
#include "sthgcn/ad/tensor.hpp"

#include "sthgcn/data/csv_io.hpp"
#include "sthgcn/data/dataset.hpp"
#include "sthgcn/data/scaler.hpp"
#include "sthgcn/data/series.hpp"
#include "sthgcn/data/slicing.hpp"
#include "sthgcn/data/time.hpp"

#include "sthgcn/graph/adjacency.hpp"
#include "sthgcn/graph/correlation.hpp"
#include "sthgcn/graph/diagnostics.hpp"
#include "sthgcn/graph/edge_list.hpp"
#include "sthgcn/graph/geo.hpp"
#include "sthgcn/graph/graph_set.hpp"
#include "sthgcn/graph/laplacian.hpp"

#include "sthgcn/model/checkpoint.hpp"
#include "sthgcn/model/inputs.hpp"
#include "sthgcn/model/layers.hpp"
#include "sthgcn/model/params.hpp"
#include "sthgcn/model/sthgcn.hpp"

#include "sthgcn/train/loss.hpp"
#include "sthgcn/train/rmsprop.hpp"
#include "sthgcn/train/trainer.hpp"

#include "sthgcn/baseline/baselines.hpp"
#include "sthgcn/synth/generator.hpp"

#include "sthgcn/app/config.hpp"
#include "sthgcn/app/pipeline.hpp"
