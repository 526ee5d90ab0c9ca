#pragma once

// Configuration, run orchestration and rendering.
#include "bohmwg/config.hpp"
#include "bohmwg/render.hpp"
#include "bohmwg/run.hpp"
#include "bohmwg/version.hpp"
