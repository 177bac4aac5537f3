#pragma once

// Convenience umbrella: the whole library.

#include "diffreg.hpp"
#include "experiment.hpp"
#include "fdk.hpp"
#include "io.hpp"
#include "krylov.hpp"
#include "linear_map.hpp"
#include "metrics.hpp"
#include "phantoms.hpp"
#include "projector.hpp"
#include "recon.hpp"
#include "types.hpp"
#include "vector_ops.hpp"
