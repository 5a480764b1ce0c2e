#pragma once

// Umbrella header.

#include "agentflow/errors.hpp"
#include "agentflow/types.hpp"
#include "agentflow/trace.hpp"
#include "agentflow/engine.hpp"

#include "agentflow/messaging/topic.hpp"
#include "agentflow/messaging/message.hpp"
#include "agentflow/messaging/network.hpp"
#include "agentflow/messaging/broker.hpp"

#include "agentflow/agent/runtime.hpp"

#include "agentflow/logistics/envelope.hpp"
#include "agentflow/logistics/request.hpp"
#include "agentflow/logistics/response.hpp"

#include "agentflow/election/load.hpp"
#include "agentflow/election/round.hpp"
#include "agentflow/election/heartbeat.hpp"
#include "agentflow/election/wire.hpp"
#include "agentflow/election/service_agent.hpp"
#include "agentflow/election/coordinator.hpp"

#include "agentflow/sim/config.hpp"
#include "agentflow/sim/schedule.hpp"
#include "agentflow/sim/amr.hpp"
#include "agentflow/sim/metrics.hpp"
#include "agentflow/sim/audit.hpp"
#include "agentflow/sim/simulator.hpp"

#include "agentflow/cli/scenario.hpp"
#include "agentflow/cli/commands.hpp"
