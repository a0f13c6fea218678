#pragma once

// Umbrella header for the dorsiflexion-recognition toolkit.

#include "dorsiflex/adaptive.hpp"
#include "dorsiflex/cnn.hpp"
#include "dorsiflex/config.hpp"
#include "dorsiflex/corpus.hpp"
#include "dorsiflex/error.hpp"
#include "dorsiflex/eval.hpp"
#include "dorsiflex/features.hpp"
#include "dorsiflex/ingest.hpp"
#include "dorsiflex/knn.hpp"
#include "dorsiflex/mlp.hpp"
#include "dorsiflex/model_io.hpp"
#include "dorsiflex/pipeline.hpp"
#include "dorsiflex/rng.hpp"
#include "dorsiflex/selection.hpp"
#include "dorsiflex/signal.hpp"
#include "dorsiflex/svm.hpp"
#include "dorsiflex/text.hpp"
