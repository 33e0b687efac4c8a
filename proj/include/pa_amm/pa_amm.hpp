#pragma once

#include "arbitrage.hpp"
#include "cfmm.hpp"
#include "control.hpp"
#include "dynamics.hpp"
#include "engine.hpp"
#include "io.hpp"
#include "rng.hpp"
#include "stats.hpp"
