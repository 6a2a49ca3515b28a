#pragma once

#include "stochlind/channels.hpp"
#include "stochlind/errors.hpp"
#include "stochlind/ito_engine.hpp"
#include "stochlind/lindblad.hpp"
#include "stochlind/noise.hpp"
#include "stochlind/ode.hpp"
#include "stochlind/operator_algebra.hpp"
#include "stochlind/random.hpp"
#include "stochlind/unraveling.hpp"
