#pragma once

// Everything except the command-line layer (shearspec/cli.hpp).

#include "shearspec/catseye.hpp"
#include "shearspec/chebyshev.hpp"
#include "shearspec/contour.hpp"
#include "shearspec/error.hpp"
#include "shearspec/orr_sommerfeld.hpp"
#include "shearspec/profiles.hpp"
#include "shearspec/rayleigh.hpp"
#include "shearspec/shear3d.hpp"
#include "shearspec/sturm.hpp"
