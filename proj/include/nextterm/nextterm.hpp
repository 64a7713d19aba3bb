#pragma once

// Everything except the HTTP service (include nextterm/service.hpp for that).

#include "nextterm/checkpoint.hpp"
#include "nextterm/encoder.hpp"
#include "nextterm/error.hpp"
#include "nextterm/lstm.hpp"
#include "nextterm/metrics.hpp"
#include "nextterm/model.hpp"
#include "nextterm/pipeline.hpp"
#include "nextterm/planner.hpp"
#include "nextterm/synthdata.hpp"
#include "nextterm/trainer.hpp"
#include "nextterm/transcript.hpp"
