#pragma once

#include "bamsdn/bam.hpp"
#include "bamsdn/controller.hpp"
#include "bamsdn/core.hpp"
#include "bamsdn/error.hpp"
#include "bamsdn/fabric.hpp"
#include "bamsdn/invariants.hpp"
#include "bamsdn/metrics.hpp"
#include "bamsdn/scenario.hpp"
#include "bamsdn/units.hpp"
