#pragma once

// Umbrella header.

#include "whmpc/core/errors.hpp"
#include "whmpc/core/units.hpp"
#include "whmpc/draws/estimation.hpp"
#include "whmpc/draws/forecast.hpp"
#include "whmpc/draws/history.hpp"
#include "whmpc/draws/series.hpp"
#include "whmpc/harness/config.hpp"
#include "whmpc/harness/draw_trace.hpp"
#include "whmpc/harness/metrics.hpp"
#include "whmpc/harness/prices.hpp"
#include "whmpc/harness/report.hpp"
#include "whmpc/harness/runner.hpp"
#include "whmpc/harness/scenario.hpp"
#include "whmpc/models/identification.hpp"
#include "whmpc/models/one_node.hpp"
#include "whmpc/models/three_node.hpp"
#include "whmpc/mpc/duty_cycle.hpp"
#include "whmpc/mpc/horizon.hpp"
#include "whmpc/mpc/interior_point.hpp"
#include "whmpc/mpc/one_node_mpc.hpp"
#include "whmpc/mpc/three_node_mpc.hpp"
#include "whmpc/tank/plant.hpp"
#include "whmpc/tank/sensors.hpp"
#include "whmpc/tank/thermostat.hpp"
