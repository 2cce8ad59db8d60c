#pragma once

#include "longtail/config.hpp"
#include "longtail/dataset.hpp"
#include "longtail/errors.hpp"
#include "longtail/image.hpp"
#include "longtail/loss.hpp"
#include "longtail/metrics.hpp"
#include "longtail/policy.hpp"
#include "longtail/rng.hpp"
#include "longtail/schedule.hpp"
#include "longtail/trainer.hpp"
#include "longtail/transforms.hpp"
