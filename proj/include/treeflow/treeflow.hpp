#pragma once

#include "treeflow/tree.hpp"
#include "treeflow/flow.hpp"
#include "treeflow/projections.hpp"
#include "treeflow/flow_dp.hpp"
#include "treeflow/net.hpp"
#include "treeflow/estimators.hpp"
#include "treeflow/experiments.hpp"
#include "treeflow/io.hpp"
#include "treeflow/svg.hpp"
#include "treeflow/simulation.hpp"
