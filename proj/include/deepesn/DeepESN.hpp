#pragma once

#include "Analysis.hpp"
#include "Design.hpp"
#include "Errors.hpp"
#include "Init.hpp"
#include "Readout.hpp"
#include "Reservoir.hpp"
#include "Seeds.hpp"
#include "SpectralRadius.hpp"
#include "Tasks.hpp"
#include "WeightMatrix.hpp"
