#pragma once

#include "dfr/energy_model.hpp"
#include "dfr/engine.hpp"
#include "dfr/failure_injection.hpp"
#include "dfr/jacobi.hpp"
#include "dfr/platform.hpp"
#include "dfr/strategies.hpp"
#include "dfr/task_graph.hpp"
