#pragma once

// Umbrella header for the whole simulator library.

#include "sevsim/battery.hpp"
#include "sevsim/config.hpp"
#include "sevsim/csv.hpp"
#include "sevsim/detector.hpp"
#include "sevsim/engine.hpp"
#include "sevsim/epidemic.hpp"
#include "sevsim/features.hpp"
#include "sevsim/gmm.hpp"
#include "sevsim/iforest.hpp"
#include "sevsim/kld.hpp"
#include "sevsim/kmeans.hpp"
#include "sevsim/mobility.hpp"
#include "sevsim/output.hpp"
#include "sevsim/pcc.hpp"
#include "sevsim/rng.hpp"
#include "sevsim/stats.hpp"
#include "sevsim/sweep.hpp"
#include "sevsim/world.hpp"
