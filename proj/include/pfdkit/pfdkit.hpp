#pragma once

#include "pfdkit/approx.hpp"
#include "pfdkit/fault_tree.hpp"
#include "pfdkit/laws.hpp"
#include "pfdkit/markov.hpp"
#include "pfdkit/petri.hpp"
#include "pfdkit/report.hpp"
#include "pfdkit/scenario.hpp"
