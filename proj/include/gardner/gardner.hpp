#pragma once

#include "gardner/errors.hpp"
#include "gardner/grid.hpp"
#include "gardner/oracle.hpp"
#include "gardner/picard.hpp"
#include "gardner/plan.hpp"
#include "gardner/profiles.hpp"
#include "gardner/spectral.hpp"
#include "gardner/stepper.hpp"
