#pragma once

// Umbrella header: the full streaming-CCA toolkit.

#include "scca/common.hpp"
#include "scca/data.hpp"
#include "scca/evaluation.hpp"
#include "scca/meg.hpp"
#include "scca/msg.hpp"
#include "scca/oracle.hpp"
#include "scca/rounding.hpp"
#include "scca/runner.hpp"
#include "scca/spectral.hpp"
#include "scca/stream.hpp"
#include "scca/synthetic.hpp"
#include "scca/whitening.hpp"
