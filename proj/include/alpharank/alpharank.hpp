#pragma once

#include "alpharank/random.hpp"
#include "alpharank/math.hpp"
#include "alpharank/prior.hpp"
#include "alpharank/particle.hpp"
#include "alpharank/belief.hpp"
#include "alpharank/policies.hpp"
#include "alpharank/nn.hpp"
#include "alpharank/policy.hpp"
#include "alpharank/rollout.hpp"
#include "alpharank/parallel.hpp"
#include "alpharank/episode.hpp"
#include "alpharank/experiment.hpp"
#include "alpharank/pretrain.hpp"
#include "alpharank/dcr.hpp"
#include "alpharank/config.hpp"
