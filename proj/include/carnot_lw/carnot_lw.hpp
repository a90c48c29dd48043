#pragma once

// Everything in one include.

#include "carnot_lw/brascamp_lieb.hpp"
#include "carnot_lw/constants.hpp"
#include "carnot_lw/density.hpp"
#include "carnot_lw/entropy_checks.hpp"
#include "carnot_lw/error.hpp"
#include "carnot_lw/grid.hpp"
#include "carnot_lw/group.hpp"
#include "carnot_lw/lw.hpp"
#include "carnot_lw/presets.hpp"
#include "carnot_lw/radon.hpp"
#include "carnot_lw/report.hpp"
#include "carnot_lw/sobolev.hpp"
#include "carnot_lw/suites.hpp"
