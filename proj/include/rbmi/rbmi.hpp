#pragma once

#include "rbmi/ais.hpp"
#include "rbmi/brute.hpp"
#include "rbmi/data.hpp"
#include "rbmi/estimators.hpp"
#include "rbmi/exact_sampler.hpp"
#include "rbmi/gradient.hpp"
#include "rbmi/io.hpp"
#include "rbmi/math.hpp"
#include "rbmi/meanfield.hpp"
#include "rbmi/model.hpp"
#include "rbmi/oracle.hpp"
#include "rbmi/rng.hpp"
#include "rbmi/sampler.hpp"
#include "rbmi/trainer.hpp"
