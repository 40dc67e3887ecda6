#pragma once

#include "evosim/config.hpp"
#include "evosim/core.hpp"
#include "evosim/engine.hpp"
#include "evosim/errors.hpp"
#include "evosim/http_provider.hpp"
#include "evosim/metrics.hpp"
#include "evosim/participant.hpp"
#include "evosim/provider.hpp"
#include "evosim/report.hpp"
#include "evosim/scripted_provider.hpp"
#include "evosim/supervisor.hpp"
