#pragma once

#include "confusion.hpp"
#include "dataset.hpp"
#include "designer.hpp"
#include "error.hpp"
#include "estimators.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "mos_vector.hpp"
#include "observer_model.hpp"
#include "random.hpp"
#include "resampling.hpp"
#include "screening.hpp"
#include "session.hpp"
#include "stats.hpp"
