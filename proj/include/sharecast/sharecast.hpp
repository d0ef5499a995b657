#pragma once

#include "cascade.hpp"
#include "errors.hpp"
#include "evaluation.hpp"
#include "io.hpp"
#include "kernel.hpp"
#include "params.hpp"
#include "seismic.hpp"
#include "service.hpp"
#include "simulator.hpp"
#include "weseer.hpp"
#include "whatif.hpp"
