#pragma once

// Umbrella header for the fermiflux library: non-equilibrium steady states,
// particle currents and entropy production of discrete-time fermionic
// walkers coupled to translation-invariant reservoirs.

#include "fermiflux/commands.hpp"
#include "fermiflux/config.hpp"
#include "fermiflux/entropy.hpp"
#include "fermiflux/errors.hpp"
#include "fermiflux/model.hpp"
#include "fermiflux/numerics.hpp"
#include "fermiflux/oracle.hpp"
#include "fermiflux/parallel.hpp"
#include "fermiflux/perturbation.hpp"
#include "fermiflux/presets.hpp"
#include "fermiflux/scattering.hpp"
#include "fermiflux/steady.hpp"
#include "fermiflux/transport.hpp"
