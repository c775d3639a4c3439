#pragma once

#include "sblr/cli.hpp"
#include "sblr/data_io.hpp"
#include "sblr/linear.hpp"
#include "sblr/loss.hpp"
#include "sblr/metrics.hpp"
#include "sblr/multiclass.hpp"
#include "sblr/prox.hpp"
#include "sblr/rng.hpp"
#include "sblr/solver_bcd.hpp"
#include "sblr/solver_bcpd.hpp"
#include "sblr/types.hpp"
