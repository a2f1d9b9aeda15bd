#pragma once

#include "cluster.hpp"
#include "core.hpp"
#include "counting.hpp"
#include "dtree.hpp"
#include "fixpoint.hpp"
#include "graph.hpp"
#include "gw.hpp"
#include "io.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "wp.hpp"
