#pragma once

// Umbrella header.

#include "spectro/config.hpp"
#include "spectro/controls.hpp"
#include "spectro/error.hpp"
#include "spectro/estimator.hpp"
#include "spectro/harness.hpp"
#include "spectro/metrics.hpp"
#include "spectro/noisesim.hpp"
#include "spectro/spectra.hpp"
#include "spectro/types.hpp"
