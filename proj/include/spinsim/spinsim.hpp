#pragma once

#include "spinsim/constants.hpp"
#include "spinsim/errors.hpp"
#include "spinsim/field_config.hpp"
#include "spinsim/hamiltonian.hpp"
#include "spinsim/imaging.hpp"
#include "spinsim/multispin.hpp"
#include "spinsim/oracle.hpp"
#include "spinsim/propagator.hpp"
#include "spinsim/sequence.hpp"
#include "spinsim/spinor.hpp"
