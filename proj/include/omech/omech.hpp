#pragma once

#include "omech/algebra.hpp"
#include "omech/classical.hpp"
#include "omech/entangle.hpp"
#include "omech/errors.hpp"
#include "omech/fft.hpp"
#include "omech/grid.hpp"
#include "omech/kvn.hpp"
#include "omech/operator.hpp"
#include "omech/parallel.hpp"
#include "omech/quantizer.hpp"
#include "omech/random_matrix.hpp"
#include "omech/spectral.hpp"
