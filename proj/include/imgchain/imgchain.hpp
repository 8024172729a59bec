#pragma once

#include "imgchain/core/image.hpp"
#include "imgchain/core/manifest.hpp"
#include "imgchain/core/raster.hpp"
#include "imgchain/core/sensor_config.hpp"
#include "imgchain/error.hpp"
#include "imgchain/fft.hpp"
#include "imgchain/harness/cache.hpp"
#include "imgchain/harness/evaluator.hpp"
#include "imgchain/harness/folds.hpp"
#include "imgchain/harness/results.hpp"
#include "imgchain/harness/sweep.hpp"
#include "imgchain/io/bimg.hpp"
#include "imgchain/io/emb1.hpp"
#include "imgchain/io/load.hpp"
#include "imgchain/io/tiff.hpp"
#include "imgchain/optics.hpp"
#include "imgchain/parallel.hpp"
#include "imgchain/pipeline.hpp"
#include "imgchain/radiometry.hpp"
#include "imgchain/recognition_metrics.hpp"
#include "imgchain/resample.hpp"
#include "imgchain/rng.hpp"
#include "imgchain/spectrum.hpp"
#include "imgchain/utility_metrics.hpp"
