#pragma once

#include "ringlab/error.hpp"
#include "ringlab/rng.hpp"
#include "ringlab/parallel.hpp"
#include "ringlab/measures.hpp"
#include "ringlab/linalg.hpp"
#include "ringlab/freeprob.hpp"
#include "ringlab/ringlaw.hpp"
#include "ringlab/fz.hpp"
#include "ringlab/rmt.hpp"
#include "ringlab/harness/config.hpp"
#include "ringlab/harness/run.hpp"
#include "ringlab/harness/plots.hpp"
#include "ringlab/harness/commands.hpp"
