#pragma once

#include "material.hpp"
#include "quadrature.hpp"
#include "mesh.hpp"
#include "polynomial.hpp"
#include "spaces.hpp"
#include "forms.hpp"
#include "solver.hpp"
#include "exact.hpp"
#include "residual.hpp"
#include "infsup.hpp"
#include "study.hpp"
#include "persistence.hpp"
#include "version.hpp"
