#pragma once

// Umbrella header: the whole library.

#include "babbage/builtins.hpp"
#include "babbage/equation.hpp"
#include "babbage/expression.hpp"
#include "babbage/interval.hpp"
#include "babbage/linear_check.hpp"
#include "babbage/linearize.hpp"
#include "babbage/map_spec.hpp"
#include "babbage/obstruction.hpp"
#include "babbage/polynomial.hpp"
#include "babbage/rational.hpp"
#include "babbage/report.hpp"
#include "babbage/sampling.hpp"
#include "babbage/spec_file.hpp"
