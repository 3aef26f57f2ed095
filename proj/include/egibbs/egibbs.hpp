#pragma once

#include "egibbs/certificate.hpp"
#include "egibbs/error.hpp"
#include "egibbs/gibbs.hpp"
#include "egibbs/graph.hpp"
#include "egibbs/heat_kernel.hpp"
#include "egibbs/interaction.hpp"
#include "egibbs/loop_space.hpp"
#include "egibbs/rng.hpp"
