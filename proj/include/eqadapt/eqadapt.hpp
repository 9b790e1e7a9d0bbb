#ifndef EQADAPT_EQADAPT_HPP
#define EQADAPT_EQADAPT_HPP

#include "eqadapt/constraint.hpp"
#include "eqadapt/errors.hpp"
#include "eqadapt/expression.hpp"
#include "eqadapt/format.hpp"
#include "eqadapt/io.hpp"
#include "eqadapt/laws.hpp"
#include "eqadapt/metrics.hpp"
#include "eqadapt/plant.hpp"
#include "eqadapt/rk4.hpp"
#include "eqadapt/scenario.hpp"
#include "eqadapt/simulation.hpp"

#endif
