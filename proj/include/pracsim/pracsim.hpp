#pragma once

#include "pracsim/batch_log.hpp"
#include "pracsim/buffer.hpp"
#include "pracsim/config.hpp"
#include "pracsim/counter_cache.hpp"
#include "pracsim/counter_store.hpp"
#include "pracsim/energy.hpp"
#include "pracsim/engine.hpp"
#include "pracsim/errors.hpp"
#include "pracsim/geometry.hpp"
#include "pracsim/metrics.hpp"
#include "pracsim/oracle.hpp"
#include "pracsim/random.hpp"
#include "pracsim/report.hpp"
#include "pracsim/trace.hpp"
