#pragma once

#include "fedgem/client.hpp"
#include "fedgem/config.hpp"
#include "fedgem/core.hpp"
#include "fedgem/datagen.hpp"
#include "fedgem/dp.hpp"
#include "fedgem/errors.hpp"
#include "fedgem/gmm.hpp"
#include "fedgem/harness.hpp"
#include "fedgem/metrics.hpp"
#include "fedgem/radius.hpp"
#include "fedgem/rng.hpp"
#include "fedgem/server.hpp"
