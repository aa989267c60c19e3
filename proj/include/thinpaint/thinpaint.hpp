#pragma once

// Umbrella header: pulls in the whole library.

#include "thinpaint/core/error.hpp"
#include "thinpaint/core/image.hpp"
#include "thinpaint/core/rng.hpp"

#include "thinpaint/mask/augment.hpp"
#include "thinpaint/mask/png_io.hpp"
#include "thinpaint/mask/skeleton.hpp"
#include "thinpaint/mask/synthetic.hpp"

#include "thinpaint/gaps/gaps.hpp"
#include "thinpaint/patch/patching.hpp"

#include "thinpaint/nn/adam.hpp"
#include "thinpaint/nn/bindings.hpp"
#include "thinpaint/nn/checkpoint.hpp"
#include "thinpaint/nn/layers.hpp"
#include "thinpaint/nn/param_store.hpp"
#include "thinpaint/nn/spectral_norm.hpp"
#include "thinpaint/nn/tape.hpp"
#include "thinpaint/nn/tensor.hpp"

#include "thinpaint/model/discriminators.hpp"
#include "thinpaint/model/generator.hpp"
#include "thinpaint/model/losses.hpp"

#include "thinpaint/metrics/convex_hull.hpp"
#include "thinpaint/metrics/metrics.hpp"

#include "thinpaint/train/dataset.hpp"
#include "thinpaint/train/train_config.hpp"
#include "thinpaint/train/trainer.hpp"

#include "thinpaint/cli/commands.hpp"
#include "thinpaint/cli/run_config.hpp"
