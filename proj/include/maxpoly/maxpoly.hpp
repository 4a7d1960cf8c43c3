#ifndef MAXPOLY_MAXPOLY_HPP_
#define MAXPOLY_MAXPOLY_HPP_

#include "maxpoly/error.hpp"
#include "maxpoly/symbol.hpp"
#include "maxpoly/rng.hpp"
#include "maxpoly/grid.hpp"
#include "maxpoly/util.hpp"
#include "maxpoly/corpus.hpp"
#include "maxpoly/topology.hpp"
#include "maxpoly/model.hpp"
#include "maxpoly/model_io.hpp"
#include "maxpoly/optimizer.hpp"
#include "maxpoly/trainer.hpp"
#include "maxpoly/sampler.hpp"
#include "maxpoly/evaluator.hpp"
#include "maxpoly/harmonizer.hpp"
#include "maxpoly/service.hpp"

#endif  // MAXPOLY_MAXPOLY_HPP_
