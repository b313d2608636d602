#pragma once

#include "cdbmm/errors.hpp"
#include "cdbmm/estimands.hpp"
#include "cdbmm/fit.hpp"
#include "cdbmm/gibbs.hpp"
#include "cdbmm/io.hpp"
#include "cdbmm/matching.hpp"
#include "cdbmm/model.hpp"
#include "cdbmm/normal_math.hpp"
#include "cdbmm/partition.hpp"
#include "cdbmm/pipeline.hpp"
#include "cdbmm/rng.hpp"
#include "cdbmm/sampling.hpp"
#include "cdbmm/scenarios.hpp"
