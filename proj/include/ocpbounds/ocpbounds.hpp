#pragma once

#include "ocpbounds/algorithms.hpp"
#include "ocpbounds/assembly.hpp"
#include "ocpbounds/integrate.hpp"
#include "ocpbounds/io.hpp"
#include "ocpbounds/mesh.hpp"
#include "ocpbounds/ocp.hpp"
#include "ocpbounds/problems.hpp"
#include "ocpbounds/quadrature.hpp"
#include "ocpbounds/reference.hpp"
#include "ocpbounds/solve.hpp"
#include "ocpbounds/spaces.hpp"
#include "ocpbounds/verify.hpp"
