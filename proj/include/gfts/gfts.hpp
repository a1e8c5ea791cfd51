#pragma once

#include "gfts/error.hpp"
#include "gfts/linalg.hpp"
#include "gfts/parallel.hpp"
#include "gfts/graph.hpp"
#include "gfts/signal.hpp"
#include "gfts/dynamics.hpp"
#include "gfts/gft.hpp"
#include "gfts/sampling.hpp"
#include "gfts/baselines.hpp"
#include "gfts/eval.hpp"
#include "gfts/io.hpp"
