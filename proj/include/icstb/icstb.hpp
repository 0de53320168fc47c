#pragma once

#include "icstb/attack/adversary.hpp"
#include "icstb/attack/spectrum.hpp"
#include "icstb/channel/channel.hpp"
#include "icstb/channel/link.hpp"
#include "icstb/core/digest.hpp"
#include "icstb/core/engine.hpp"
#include "icstb/core/rng.hpp"
#include "icstb/core/time.hpp"
#include "icstb/ids/ids.hpp"
#include "icstb/io/records.hpp"
#include "icstb/io/scenario.hpp"
#include "icstb/modbus/flow.hpp"
#include "icstb/modbus/modbus.hpp"
#include "icstb/net/devices.hpp"
#include "icstb/net/network.hpp"
#include "icstb/plant/plant.hpp"
#include "icstb/sim/batch.hpp"
#include "icstb/sim/simulation.hpp"
