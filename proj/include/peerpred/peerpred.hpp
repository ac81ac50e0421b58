#pragma once

#include "peerpred/detail_free.hpp"
#include "peerpred/errors.hpp"
#include "peerpred/ingestion.hpp"
#include "peerpred/io.hpp"
#include "peerpred/matrix.hpp"
#include "peerpred/rng.hpp"
#include "peerpred/scoring.hpp"
#include "peerpred/signal_model.hpp"
#include "peerpred/simulation.hpp"
#include "peerpred/strategy.hpp"
#include "peerpred/strategy_analysis.hpp"
#include "peerpred/tolerances.hpp"
