#pragma once

#include "banditware/core.hpp"
#include "banditware/regression.hpp"
#include "banditware/rng.hpp"
#include "banditware/bandit.hpp"
#include "banditware/persistence.hpp"
#include "banditware/csv.hpp"
#include "banditware/dataset.hpp"
#include "banditware/synth.hpp"
#include "banditware/matmul.hpp"
#include "banditware/experiment.hpp"
#include "banditware/report.hpp"
