#pragma once

#include "rosae/benchmark.hpp"
#include "rosae/corpus.hpp"
#include "rosae/ensemble.hpp"
#include "rosae/error.hpp"
#include "rosae/knn.hpp"
#include "rosae/lle.hpp"
#include "rosae/matrix.hpp"
#include "rosae/metrics.hpp"
#include "rosae/model_io.hpp"
#include "rosae/report.hpp"
#include "rosae/rlae.hpp"
#include "rosae/rng.hpp"
#include "rosae/tac.hpp"
#include "rosae/version.hpp"
