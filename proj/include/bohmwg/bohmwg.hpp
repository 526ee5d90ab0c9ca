#pragma once

#include "bohmwg/bohm.hpp"
#include "bohmwg/cf2d.hpp"
#include "bohmwg/cliio.hpp"
#include "bohmwg/doublewell1d.hpp"
#include "bohmwg/errors.hpp"
#include "bohmwg/fft.hpp"
#include "bohmwg/field.hpp"
#include "bohmwg/grid.hpp"
#include "bohmwg/potentials.hpp"
#include "bohmwg/stats.hpp"
#include "bohmwg/tdse1d.hpp"
#include "bohmwg/tdse2d.hpp"
#include "bohmwg/trajectory.hpp"
