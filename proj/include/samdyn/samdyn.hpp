#pragma once

#include "samdyn/config.hpp"
#include "samdyn/dynamics.hpp"
#include "samdyn/error.hpp"
#include "samdyn/losses.hpp"
#include "samdyn/numerics.hpp"
#include "samdyn/potential.hpp"
#include "samdyn/sam.hpp"
#include "samdyn/theory.hpp"
#include "samdyn/harness/experiment.hpp"
#include "samdyn/harness/init.hpp"
#include "samdyn/harness/parallel.hpp"
#include "samdyn/harness/rng.hpp"
