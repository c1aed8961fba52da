#pragma once

#include "ilms/analysis.hpp"
#include "ilms/config.hpp"
#include "ilms/engine.hpp"
#include "ilms/errors.hpp"
#include "ilms/experiment.hpp"
#include "ilms/model.hpp"
#include "ilms/random.hpp"
#include "ilms/results.hpp"
#include "ilms/version.hpp"
