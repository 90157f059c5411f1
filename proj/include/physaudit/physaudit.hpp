#pragma once

// Umbrella header.

#include "physaudit/audio.hpp"
#include "physaudit/audit.hpp"
#include "physaudit/config.hpp"
#include "physaudit/elo.hpp"
#include "physaudit/error.hpp"
#include "physaudit/fft.hpp"
#include "physaudit/manifest.hpp"
#include "physaudit/metrics.hpp"
#include "physaudit/onset.hpp"
#include "physaudit/report.hpp"
#include "physaudit/runner.hpp"
#include "physaudit/signal.hpp"
#include "physaudit/stats.hpp"
#include "physaudit/synth.hpp"
#include "physaudit/timewarp.hpp"
#include "physaudit/wav.hpp"
