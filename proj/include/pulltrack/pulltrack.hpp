#pragma once

#include "pulltrack/belief.hpp"
#include "pulltrack/distortion.hpp"
#include "pulltrack/experiments.hpp"
#include "pulltrack/finite_mdp.hpp"
#include "pulltrack/io.hpp"
#include "pulltrack/markov.hpp"
#include "pulltrack/policies.hpp"
#include "pulltrack/simulator.hpp"
#include "pulltrack/solver.hpp"
#include "pulltrack/tracking_model.hpp"
#include "pulltrack/validation.hpp"
