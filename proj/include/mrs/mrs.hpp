#pragma once

#include "analysis.hpp"
#include "baselines.hpp"
#include "errors.hpp"
#include "experiment.hpp"
#include "features.hpp"
#include "field.hpp"
#include "fleet.hpp"
#include "io.hpp"
#include "learn.hpp"
#include "mdp.hpp"
#include "policy.hpp"
#include "rng.hpp"
#include "trajectory.hpp"
