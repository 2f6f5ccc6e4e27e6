#pragma once

#include "pld/analytics.hpp"
#include "pld/config.hpp"
#include "pld/denoise.hpp"
#include "pld/evaluation.hpp"
#include "pld/interactions.hpp"
#include "pld/io.hpp"
#include "pld/loss.hpp"
#include "pld/model.hpp"
#include "pld/rng.hpp"
#include "pld/sampler.hpp"
#include "pld/theory.hpp"
#include "pld/trainer.hpp"
