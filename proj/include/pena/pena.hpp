#pragma once

#include "pena/bounds.hpp"
#include "pena/coalescent.hpp"
#include "pena/config.hpp"
#include "pena/errors.hpp"
#include "pena/expo.hpp"
#include "pena/io.hpp"
#include "pena/ksum.hpp"
#include "pena/mark_law.hpp"
#include "pena/math_util.hpp"
#include "pena/mc.hpp"
#include "pena/models.hpp"
#include "pena/ode.hpp"
#include "pena/oracle.hpp"
#include "pena/pp_core.hpp"
#include "pena/quadrature.hpp"
#include "pena/rng.hpp"
#include "pena/stoch_int.hpp"
