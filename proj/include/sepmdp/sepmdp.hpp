#pragma once

#include "sepmdp/chain.hpp"
#include "sepmdp/errors.hpp"
#include "sepmdp/fit.hpp"
#include "sepmdp/mdp.hpp"
#include "sepmdp/montecarlo.hpp"
#include "sepmdp/perturbation.hpp"
#include "sepmdp/separable.hpp"
#include "sepmdp/solvers.hpp"
#include "sepmdp/types.hpp"
