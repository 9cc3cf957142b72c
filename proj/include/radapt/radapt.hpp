#pragma once

#include "radapt/analysis.hpp"
#include "radapt/core.hpp"
#include "radapt/csv.hpp"
#include "radapt/design_json.hpp"
#include "radapt/designs.hpp"
#include "radapt/engine.hpp"
#include "radapt/error.hpp"
#include "radapt/mapping.hpp"
#include "radapt/outcomes.hpp"
#include "radapt/posterior.hpp"
#include "radapt/randlist.hpp"
#include "radapt/reports.hpp"
#include "radapt/rng.hpp"
#include "radapt/rules.hpp"
#include "radapt/trajectory.hpp"
