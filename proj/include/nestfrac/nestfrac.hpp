#pragma once

#include "nestfrac/catalog.hpp"
#include "nestfrac/error.hpp"
#include "nestfrac/forms.hpp"
#include "nestfrac/geometry.hpp"
#include "nestfrac/harmonic_structure.hpp"
#include "nestfrac/measures.hpp"
#include "nestfrac/poincare.hpp"
#include "nestfrac/property_p.hpp"
#include "nestfrac/random.hpp"
#include "nestfrac/selftest.hpp"
#include "nestfrac/sobolev.hpp"
