#pragma once

#include "csv.hpp"
#include "dataio.hpp"
#include "decomposition.hpp"
#include "ensembling.hpp"
#include "errors.hpp"
#include "importance.hpp"
#include "normal.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "rational.hpp"
#include "scoring.hpp"
#include "simulation.hpp"
#include "task_key.hpp"
