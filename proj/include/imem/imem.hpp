#pragma once

#include "imem/engine.hpp"
#include "imem/error.hpp"
#include "imem/harness.hpp"
#include "imem/parallel.hpp"
#include "imem/reingest_sim.hpp"
#include "imem/rng.hpp"
#include "imem/sanitizer.hpp"
#include "imem/semantic_codec.hpp"
#include "imem/signal_detector.hpp"
#include "imem/state.hpp"
#include "imem/utf8.hpp"
#include "imem/zw_codec.hpp"
