#pragma once

// Umbrella header for the aniflow library.

#include "aniflow/anisotropy.hpp"
#include "aniflow/assembly.hpp"
#include "aniflow/cli.hpp"
#include "aniflow/config.hpp"
#include "aniflow/diagnostics.hpp"
#include "aniflow/errors.hpp"
#include "aniflow/flows.hpp"
#include "aniflow/geometry.hpp"
#include "aniflow/io.hpp"
#include "aniflow/solver.hpp"
#include "aniflow/stabilization.hpp"
