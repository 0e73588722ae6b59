#pragma once

#include "avgrew/core.hpp"
#include "avgrew/mdp.hpp"
#include "avgrew/linalg.hpp"
#include "avgrew/oracles.hpp"
#include "avgrew/pessimism.hpp"
#include "avgrew/rng.hpp"
#include "avgrew/solver.hpp"
#include "avgrew/instances.hpp"
#include "avgrew/random.hpp"
#include "avgrew/properties.hpp"
#include "avgrew/io.hpp"
#include "avgrew/harness.hpp"
