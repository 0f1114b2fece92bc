#pragma once

#include "proxauth/auth.hpp"
#include "proxauth/errors.hpp"
#include "proxauth/proximity.hpp"
#include "proxauth/rf_sim.hpp"
#include "proxauth/rng.hpp"
#include "proxauth/scan.hpp"
#include "proxauth/scenario.hpp"
