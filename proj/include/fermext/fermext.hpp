#pragma once

#include "fermext/bounds.hpp"
#include "fermext/definetti.hpp"
#include "fermext/fock.hpp"
#include "fermext/graph.hpp"
#include "fermext/hamiltonian.hpp"
#include "fermext/io.hpp"
#include "fermext/parallel.hpp"
#include "fermext/report.hpp"
#include "fermext/rng.hpp"
#include "fermext/state.hpp"
