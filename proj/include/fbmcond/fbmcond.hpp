#pragma once

#include "fbmcond/errors.hpp"
#include "fbmcond/specfun.hpp"
#include "fbmcond/fbm_model.hpp"
#include "fbmcond/fou_conditional.hpp"
#include "fbmcond/derived_processes.hpp"
#include "fbmcond/cos_pricing.hpp"
#include "fbmcond/mc_oracle.hpp"
