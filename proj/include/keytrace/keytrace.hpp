#pragma once

#include "eval.hpp"
#include "experiment.hpp"
#include "feature_matrix.hpp"
#include "keylog.hpp"
#include "learn/cv.hpp"
#include "learn/ga.hpp"
#include "learn/model.hpp"
#include "manifest.hpp"
#include "pipeline.hpp"
#include "preprocess.hpp"
#include "rhythmic.hpp"
#include "rng.hpp"
#include "samples.hpp"
#include "stats.hpp"
#include "synthgen.hpp"
#include "temporal.hpp"
