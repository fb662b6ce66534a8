#pragma once

#include "fdr/continuation.hpp"
#include "fdr/dual.hpp"
#include "fdr/errors.hpp"
#include "fdr/experiment.hpp"
#include "fdr/generators.hpp"
#include "fdr/measure.hpp"
#include "fdr/normalize.hpp"
#include "fdr/risk.hpp"
#include "fdr/tilt.hpp"
