#pragma once

// Umbrella header: every public module of the library.

#include "levyldp/core.hpp"
#include "levyldp/quadrature.hpp"
#include "levyldp/levy.hpp"
#include "levyldp/prm.hpp"
#include "levyldp/ode.hpp"
#include "levyldp/msde.hpp"
#include "levyldp/parallel.hpp"
#include "levyldp/csv.hpp"
#include "levyldp/averaging.hpp"
#include "levyldp/benchmarks.hpp"
#include "levyldp/domain.hpp"
#include "levyldp/action.hpp"
#include "levyldp/kramers.hpp"
#include "levyldp/toyldp.hpp"
#include "levyldp/experiment.hpp"
